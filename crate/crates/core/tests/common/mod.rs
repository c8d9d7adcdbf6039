//! Test-only oracles, independent of the library's solvers.
#![allow(dead_code)]

use actigel::material::{AnchoringData, MaterialParams};

/// Classical fourth-order Runge-Kutta, returning the state at every output
/// node (`substeps` steps between consecutive nodes).
pub fn rk4(f: impl Fn(f64, &[f64]) -> Vec<f64>, nodes: &[f64], y0: &[f64], substeps: usize) -> Vec<Vec<f64>> {
    let mut out = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    for w in nodes.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        let mut x = w[0];
        for _ in 0..substeps {
            let k1 = f(x, &y);
            let t: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
            let k2 = f(x + 0.5 * h, &t);
            let t: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
            let k3 = f(x + 0.5 * h, &t);
            let t: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
            let k4 = f(x + h, &t);
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            x += h;
        }
        out.push(y.clone());
    }
    out
}

/// Passive flat-film equations in `[theta, theta', q, q']`.
pub fn flat_rhs(p: &MaterialParams) -> impl Fn(f64, &[f64]) -> Vec<f64> + '_ {
    move |_, y| {
        let (dt, q, dq) = (y[1], y[2], y[3]);
        vec![dt, -2.0 * dq * dt / q, dq, 4.0 * q * dt * dt - q / p.l1 * (p.a2 - 0.5 * p.c2 * q * q)]
    }
}

/// Shooting on the slopes `(theta'(0), q'(0))` with Newton and a
/// finite-difference Jacobian. Returns `(theta, q)` at `nodes`.
pub fn shoot_flat(
    bc: &AnchoringData,
    p: &MaterialParams,
    nodes: &[f64],
    guess: [f64; 2],
    substeps: usize,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let miss = |s: [f64; 2]| {
        let path = rk4(flat_rhs(p), nodes, &[bc.theta1, s[0], bc.q1, s[1]], substeps);
        let end = path.last().unwrap();
        ([end[0] - bc.theta2, end[2] - bc.q2], path)
    };
    let mut s = guess;
    for _ in 0..50 {
        let (r, path) = miss(s);
        if r[0].abs().max(r[1].abs()) < 1e-13 {
            return Some((path.iter().map(|y| y[0]).collect(), path.iter().map(|y| y[2]).collect()));
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut t = s;
            let d = 1e-7 * (1.0 + s[k].abs());
            t[k] += d;
            let (rk, _) = miss(t);
            jac[0][k] = (rk[0] - r[0]) / d;
            jac[1][k] = (rk[1] - r[1]) / d;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        s[0] -= (jac[1][1] * r[0] - jac[0][1] * r[1]) / det;
        s[1] -= (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det;
        if !s[0].is_finite() || !s[1].is_finite() {
            return None;
        }
    }
    None
}

/// Closed forms of the two rotational viscosities for the Q-tensor map.
pub fn gamma_closed_form(q: f64, p: &MaterialParams) -> (f64, f64) {
    (2.0 * q * q / p.gamma_rot, -2.0 * q * (2.0 + q) * p.xi / (3.0 * p.gamma_rot))
}

/// Amplitude of Fourier mode `k` of a periodic sample.
pub fn mode_amplitude(x: &[f64], v: &[f64], k: f64) -> f64 {
    let n = v.len() as f64;
    let (c, s) =
        x.iter().zip(v).fold((0.0, 0.0), |(c, s), (&xi, &vi)| (c + vi * (k * xi).cos(), s + vi * (k * xi).sin()));
    2.0 * c.hypot(s) / n
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Value at zero of the quadratic through three points.
pub fn extrapolate_to_zero(x: [f64; 3], y: [f64; 3]) -> f64 {
    let l0 = x[1] * x[2] / ((x[0] - x[1]) * (x[0] - x[2]));
    let l1 = x[0] * x[2] / ((x[1] - x[0]) * (x[1] - x[2]));
    let l2 = x[0] * x[1] / ((x[2] - x[0]) * (x[2] - x[1]));
    l0 * y[0] + l1 * y[1] + l2 * y[2]
}
