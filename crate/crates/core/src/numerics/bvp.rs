//! Two-point boundary value problems by three-stage Lobatto IIIA collocation.
//!
//! On each mesh interval the solution is the cubic that interpolates the
//! nodal values and slopes (the Hermite-Simpson form). The discrete equations
//! are solved by damped Newton with a banded direct solver.

use super::banded::BandMatrix;
use crate::error::{Error, Result};

/// First-order system `y' = f(x, y)` with separated boundary conditions.
pub trait BvpSystem {
    fn dim(&self) -> usize;

    /// Number of conditions imposed at the left end.
    fn n_left(&self) -> usize;

    fn rhs(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Writes `n_left` residuals.
    fn bc_left(&self, ya: &[f64], r: &mut [f64]);

    /// Writes `dim - n_left` residuals.
    fn bc_right(&self, yb: &[f64], r: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct BvpOptions {
    /// Absolute tolerance on the max-norm of the discrete residual.
    pub tol: f64,
    pub max_iter: usize,
    pub min_damping: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 60, min_damping: 1.0 / 1024.0 }
    }
}

/// Converged collocation solution. Nodal and midpoint data are stored row-major
/// with stride `dim`.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub x: Vec<f64>,
    pub dim: usize,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub y_mid: Vec<f64>,
    pub f_mid: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

impl BvpSolution {
    pub fn nodes(&self) -> usize {
        self.x.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.y.iter().skip(k).step_by(self.dim).copied().collect()
    }

    pub fn derivative(&self, k: usize) -> Vec<f64> {
        self.f.iter().skip(k).step_by(self.dim).copied().collect()
    }

    pub fn mid_component(&self, k: usize) -> Vec<f64> {
        self.y_mid.iter().skip(k).step_by(self.dim).copied().collect()
    }

    /// Evaluates the piecewise cubic and its derivative at `x`.
    pub fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.x.len();
        let i = match self.x.partition_point(|&xi| xi <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let d = self.dim;
        let (mut s, mut ds) = (vec![0.0; d], vec![0.0; d]);
        for k in 0..d {
            let (p0, p1) = (self.y[i * d + k], self.y[(i + 1) * d + k]);
            let (m0, m1) = (self.f[i * d + k], self.f[(i + 1) * d + k]);
            let (v, dv) = hermite(t, h, p0, p1, m0, m1);
            s[k] = v;
            ds[k] = dv;
        }
        (s, ds)
    }

    /// Max-norm of `S' - f(x, S)` for the interpolating cubic, sampled at the
    /// quarter points of each interval (the collocation points have zero
    /// defect by construction).
    pub fn defect<S: BvpSystem + ?Sized>(&self, sys: &S) -> Result<f64> {
        let d = self.dim;
        let mut worst = 0.0f64;
        let mut s = vec![0.0; d];
        let mut ds = vec![0.0; d];
        let mut fx = vec![0.0; d];
        for i in 0..self.x.len() - 1 {
            let h = self.x[i + 1] - self.x[i];
            for t in [0.25, 0.75] {
                for k in 0..d {
                    let (v, dv) = hermite(
                        t,
                        h,
                        self.y[i * d + k],
                        self.y[(i + 1) * d + k],
                        self.f[i * d + k],
                        self.f[(i + 1) * d + k],
                    );
                    s[k] = v;
                    ds[k] = dv;
                }
                sys.rhs(self.x[i] + t * h, &s, &mut fx)?;
                for k in 0..d {
                    worst = worst.max((ds[k] - fx[k]).abs());
                }
            }
        }
        Ok(worst)
    }
}

fn hermite(t: f64, h: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * h * m1;
    let dv = ((6.0 * t2 - 6.0 * t) * p0 + (-6.0 * t2 + 6.0 * t) * p1) / h
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (3.0 * t2 - 2.0 * t) * m1;
    (v, dv)
}

struct Discrete {
    f: Vec<f64>,
    y_mid: Vec<f64>,
    f_mid: Vec<f64>,
    residual: Vec<f64>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn evaluate<S: BvpSystem>(sys: &S, x: &[f64], y: &[f64]) -> Result<Discrete> {
    let d = sys.dim();
    let nl = sys.n_left();
    let n = x.len();
    let mut f = vec![0.0; n * d];
    for i in 0..n {
        sys.rhs(x[i], &y[i * d..(i + 1) * d], &mut f[i * d..(i + 1) * d])?;
    }
    let mut y_mid = vec![0.0; (n - 1) * d];
    let mut f_mid = vec![0.0; (n - 1) * d];
    let mut residual = vec![0.0; n * d];
    sys.bc_left(&y[..d], &mut residual[..nl]);
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        for k in 0..d {
            y_mid[i * d + k] =
                0.5 * (y[i * d + k] + y[(i + 1) * d + k]) - h / 8.0 * (f[(i + 1) * d + k] - f[i * d + k]);
        }
        sys.rhs(0.5 * (x[i] + x[i + 1]), &y_mid[i * d..(i + 1) * d], &mut f_mid[i * d..(i + 1) * d])?;
        let row = nl + i * d;
        for k in 0..d {
            residual[row + k] = (y[(i + 1) * d + k] - y[i * d + k]) / h
                - (f[i * d + k] + 4.0 * f_mid[i * d + k] + f[(i + 1) * d + k]) / 6.0;
        }
    }
    sys.bc_right(&y[(n - 1) * d..], &mut residual[nl + (n - 1) * d..]);
    Ok(Discrete { f, y_mid, f_mid, residual })
}

/// Central-difference Jacobian of `rhs`, row-major `d x d`.
fn rhs_jacobian<S: BvpSystem>(sys: &S, x: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
    let d = sys.dim();
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for j in 0..d {
        let step = 1e-7 * (1.0 + y[j].abs());
        yp[j] = y[j] + step;
        sys.rhs(x, &yp, &mut fp)?;
        yp[j] = y[j] - step;
        sys.rhs(x, &yp, &mut fm)?;
        yp[j] = y[j];
        for i in 0..d {
            out[i * d + j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(())
}

fn bc_jacobian(d: usize, rows: usize, y: &[f64], bc: impl Fn(&[f64], &mut [f64])) -> Vec<f64> {
    let mut out = vec![0.0; rows * d];
    let mut yp = y.to_vec();
    let mut rp = vec![0.0; rows];
    let mut rm = vec![0.0; rows];
    for j in 0..d {
        let step = 1e-7 * (1.0 + y[j].abs());
        yp[j] = y[j] + step;
        bc(&yp, &mut rp);
        yp[j] = y[j] - step;
        bc(&yp, &mut rm);
        yp[j] = y[j];
        for i in 0..rows {
            out[i * d + j] = (rp[i] - rm[i]) / (2.0 * step);
        }
    }
    out
}

fn assemble<S: BvpSystem>(sys: &S, x: &[f64], y: &[f64], disc: &Discrete) -> Result<BandMatrix> {
    let d = sys.dim();
    let nl = sys.n_left();
    let n = x.len();
    let kl = nl + d - 1;
    let ku = (2 * d - 1 - nl).max(d - 1);
    let mut a = BandMatrix::zeros(n * d, kl, ku);

    let jl = bc_jacobian(d, nl, &y[..d], |ya, r| sys.bc_left(ya, r));
    for r in 0..nl {
        for c in 0..d {
            a.set(r, c, jl[r * d + c]);
        }
    }
    let nr = d - nl;
    let jr = bc_jacobian(d, nr, &y[(n - 1) * d..], |yb, r| sys.bc_right(yb, r));
    let row0 = nl + (n - 1) * d;
    let col0 = (n - 1) * d;
    for r in 0..nr {
        for c in 0..d {
            a.set(row0 + r, col0 + c, jr[r * d + c]);
        }
    }

    let mut jn = vec![0.0; n * d * d];
    for i in 0..n {
        rhs_jacobian(sys, x[i], &y[i * d..(i + 1) * d], &mut jn[i * d * d..(i + 1) * d * d])?;
    }
    let mut jm = vec![0.0; d * d];
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        let xm = 0.5 * (x[i] + x[i + 1]);
        rhs_jacobian(sys, xm, &disc.y_mid[i * d..(i + 1) * d], &mut jm)?;
        let ja = &jn[i * d * d..(i + 1) * d * d];
        let jb = &jn[(i + 1) * d * d..(i + 2) * d * d];
        let row = nl + i * d;
        for r in 0..d {
            for c in 0..d {
                // (Jm * (I/2 + h/8 Ja))[r][c] and (Jm * (I/2 - h/8 Jb))[r][c]
                let mut ma = 0.5 * jm[r * d + c];
                let mut mb = 0.5 * jm[r * d + c];
                for k in 0..d {
                    ma += jm[r * d + k] * h / 8.0 * ja[k * d + c];
                    mb -= jm[r * d + k] * h / 8.0 * jb[k * d + c];
                }
                let eye = if r == c { 1.0 / h } else { 0.0 };
                a.set(row + r, i * d + c, -eye - (ja[r * d + c] + 4.0 * ma) / 6.0);
                a.set(row + r, (i + 1) * d + c, eye - (jb[r * d + c] + 4.0 * mb) / 6.0);
            }
        }
    }
    Ok(a)
}

/// Solves the collocation equations on mesh `x` starting from the nodal
/// guess `guess` (row-major, stride `dim`).
pub fn solve<S: BvpSystem>(sys: &S, x: &[f64], guess: &[f64], opts: &BvpOptions) -> Result<BvpSolution> {
    let d = sys.dim();
    let n = x.len();
    if n < 2 || guess.len() != n * d {
        return Err(Error::InvalidParameter(format!(
            "mesh of {n} nodes with a guess of length {} (dim {d})",
            guess.len()
        )));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("mesh must be strictly increasing".into()));
    }
    if sys.n_left() > d {
        return Err(Error::InvalidParameter("more left conditions than unknowns".into()));
    }
    let mut y = guess.to_vec();
    let mut disc = evaluate(sys, x, &y)?;
    let mut norm = max_norm(&disc.residual);
    let mut history = vec![norm];
    let mut iterations = 0;
    while norm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence { iterations, residual: norm, history });
        }
        iterations += 1;
        let a = assemble(sys, x, &y, &disc)?;
        let mut step: Vec<f64> = disc.residual.iter().map(|r| -r).collect();
        if a.solve_in_place(&mut step).is_none() {
            return Err(Error::NonConvergence { iterations, residual: norm, history });
        }
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(&step).map(|(a, b)| a + lambda * b).collect();
            let accepted = match evaluate(sys, x, &trial) {
                Ok(t) => {
                    let tn = max_norm(&t.residual);
                    if tn.is_finite() && tn <= (1.0 - 1e-4 * lambda) * norm {
                        y = trial;
                        disc = t;
                        norm = tn;
                        true
                    } else {
                        false
                    }
                }
                Err(e @ Error::ViscositySingularity { .. }) if lambda <= opts.min_damping => return Err(e),
                Err(_) => false,
            };
            if accepted {
                break;
            }
            lambda *= 0.5;
            if lambda < opts.min_damping {
                history.push(norm);
                return Err(Error::NonConvergence { iterations, residual: norm, history });
            }
        }
        history.push(norm);
    }
    Ok(BvpSolution {
        x: x.to_vec(),
        dim: d,
        y,
        f: disc.f,
        y_mid: disc.y_mid,
        f_mid: disc.f_mid,
        iterations,
        residual: norm,
        history,
    })
}

/// Uniform mesh of `n` nodes on `[a, b]` with exact endpoints.
pub fn uniform_mesh(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    x[0] = a;
    x[n - 1] = b;
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Bratu problem y'' + e^y = 0, y(0) = y(1) = 0, lower branch.
    struct Bratu;

    impl BvpSystem for Bratu {
        fn dim(&self) -> usize {
            2
        }
        fn n_left(&self) -> usize {
            1
        }
        fn rhs(&self, _x: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0].exp();
            Ok(())
        }
        fn bc_left(&self, ya: &[f64], r: &mut [f64]) {
            r[0] = ya[0];
        }
        fn bc_right(&self, yb: &[f64], r: &mut [f64]) {
            r[0] = yb[0];
        }
    }

    /// Linear test y'' = -y with y(0) = 0, y(pi/2) = 1; exact y = sin x.
    struct Harmonic;

    impl BvpSystem for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn n_left(&self) -> usize {
            1
        }
        fn rhs(&self, _x: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
        fn bc_left(&self, ya: &[f64], r: &mut [f64]) {
            r[0] = ya[0];
        }
        fn bc_right(&self, yb: &[f64], r: &mut [f64]) {
            r[0] = yb[0] - 1.0;
        }
    }

    #[test]
    fn bratu_lower_branch() {
        let x = uniform_mesh(0.0, 1.0, 101);
        let sol = solve(&Bratu, &x, &vec![0.0; 202], &BvpOptions::default()).unwrap();
        // Closed form y = -2 ln(cosh(t(x - 1/2)/2) / cosh(t/4)) with
        // cosh(t/4) = t / sqrt(2).
        let theta = {
            let g = |t: f64| t / 2f64.sqrt() - (t / 4.0).cosh();
            let mut lo = 0.1;
            let mut hi = 4.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(lo) * g(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let exact = |x: f64| -2.0 * ((theta * (x - 0.5) / 2.0).cosh() / (theta / 4.0).cosh()).ln();
        for (i, &xi) in x.iter().enumerate() {
            assert!((sol.node(i)[0] - exact(xi)).abs() < 1e-8);
        }
        assert!(sol.residual <= 1e-10);
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        let x = uniform_mesh(0.0, std::f64::consts::FRAC_PI_2, 41);
        let sol = solve(&Harmonic, &x, &vec![0.3; 82], &BvpOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        for (i, &xi) in x.iter().enumerate() {
            assert_relative_eq!(sol.node(i)[0], xi.sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn nodal_error_is_fourth_order() {
        let err = |n: usize| {
            let x = uniform_mesh(0.0, std::f64::consts::FRAC_PI_2, n);
            let sol = solve(&Harmonic, &x, &vec![0.0; 2 * n], &BvpOptions::default()).unwrap();
            x.iter().enumerate().map(|(i, xi)| (sol.node(i)[0] - xi.sin()).abs()).fold(0.0, f64::max)
        };
        let rate = (err(11) / err(21)).log2();
        assert!((rate - 4.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn defect_is_third_order() {
        let def = |n: usize| {
            let x = uniform_mesh(0.0, 1.0, n);
            let sol = solve(&Bratu, &x, &vec![0.0; 2 * n], &BvpOptions::default()).unwrap();
            sol.defect(&Bratu).unwrap()
        };
        let rate = (def(21) / def(41)).log2();
        assert!((rate - 3.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn cubic_interpolant_reproduces_nodes() {
        let x = uniform_mesh(0.0, 1.0, 11);
        let sol = solve(&Bratu, &x, &[0.0; 22], &BvpOptions::default()).unwrap();
        let (s, _) = sol.eval(0.3);
        assert_relative_eq!(s[0], sol.node(3)[0], epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_mesh() {
        let r = solve(&Bratu, &[0.0, 0.0, 1.0], &[0.0; 6], &BvpOptions::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
