//! Periodic film thickness and a semi-implicit stepper for conservation laws
//! of the form `eta_t = -d1 [ M(eta) eta_111 + R(eta) ]`.
//!
//! The fourth-order part is taken implicitly with the mobility `M` lagged
//! (backward Euler); the remainder `R` is explicit. Both are differenced with
//! the same centred periodic operator, so the discrete mass is conserved up
//! to round-off.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Film thickness on a uniform periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmState {
    pub x1: Vec<f64>,
    pub eta: Vec<f64>,
    pub time: f64,
}

impl FilmState {
    /// `n` nodes on the periodic interval `[0, length)` with thickness `f(x)`.
    pub fn periodic(n: usize, length: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidParameter(format!("periodic grid needs at least 8 nodes, got {n}")));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {length}")));
        }
        let h = length / n as f64;
        let x1: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let eta = x1.iter().map(|&x| f(x)).collect();
        let s = Self { x1, eta, time: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.x1[1] - self.x1[0]
    }

    pub fn period(&self) -> f64 {
        self.spacing() * self.len() as f64
    }

    pub fn mass(&self) -> f64 {
        self.spacing() * self.eta.iter().sum::<f64>()
    }

    pub fn min_eta(&self) -> f64 {
        self.eta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.eta.len();
        if n < 8 || self.x1.len() != n {
            return Err(Error::InvalidParameter("film grid and thickness must have equal length >= 8".into()));
        }
        let h = self.spacing();
        if !(h > 0.0) || self.x1.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
            return Err(Error::InvalidParameter("film grid must be uniform and increasing".into()));
        }
        if let Some(e) = self.eta.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParameter(format!("film thickness must be positive, found {e}")));
        }
        Ok(())
    }
}

/// Discretisation of `eta_111` on the periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThirdDerivative {
    /// Centred first difference applied three times (second order).
    #[default]
    ComposedCentered,
    /// Fourth-order centred seven-point stencil.
    FourthOrder,
    /// Fourier differentiation.
    Spectral,
}

/// Centred periodic first difference.
pub fn d1(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * h)).collect()
}

fn stencil_weights(kind: ThirdDerivative, h: f64) -> Vec<(isize, f64)> {
    let s = 1.0 / (8.0 * h * h * h);
    match kind {
        ThirdDerivative::ComposedCentered => vec![(3, s), (1, -3.0 * s), (-1, 3.0 * s), (-3, -s)],
        ThirdDerivative::FourthOrder => {
            vec![(3, -s), (2, 8.0 * s), (1, -13.0 * s), (-1, 13.0 * s), (-2, -8.0 * s), (-3, s)]
        }
        ThirdDerivative::Spectral => unreachable!("spectral derivative has no finite stencil"),
    }
}

/// Dense periodic third-derivative operator.
pub fn third_derivative_matrix(n: usize, h: f64, kind: ThirdDerivative) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    if kind == ThirdDerivative::Spectral {
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = spectral_third(&e, h);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        return m;
    }
    let n_i = n as isize;
    for i in 0..n {
        for &(off, w) in &stencil_weights(kind, h) {
            let j = (i as isize + off).rem_euclid(n_i) as usize;
            m[(i, j)] += w;
        }
    }
    m
}

fn spectral_third(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fwd.process(&mut buf);
    let length = h * n as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let m = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        // The Nyquist mode of an odd derivative is dropped.
        let wave = if n.is_multiple_of(2) && k == n / 2 { 0.0 } else { 2.0 * PI * m / length };
        *c *= Complex::new(0.0, wave).powi(3);
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// `eta_111` with the chosen discretisation.
pub fn third_derivative(v: &[f64], h: f64, kind: ThirdDerivative) -> Vec<f64> {
    if kind == ThirdDerivative::Spectral {
        return spectral_third(v, h);
    }
    let n = v.len() as isize;
    let w = stencil_weights(kind, h);
    (0..n).map(|i| w.iter().map(|&(off, c)| c * v[(i + off).rem_euclid(n) as usize]).sum()).collect()
}

/// Time-step selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed {
        dt: f64,
    },
    /// `dt = min(max_dt, cfl * h / max advective speed)`.
    Advective {
        cfl: f64,
        max_dt: f64,
    },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Advective { cfl: 0.5, max_dt: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub t_end: f64,
    pub dt: DtPolicy,
    /// Abort when the minimum thickness drops below this value.
    pub floor: f64,
    pub third: ThirdDerivative,
    /// Fixed-point sweeps per step; 1 keeps mobility and remainder lagged.
    pub sweeps: usize,
    /// Store a snapshot every this many steps (0 disables snapshots).
    pub snapshot_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: DtPolicy::default(),
            floor: 1e-6,
            third: ThirdDerivative::ComposedCentered,
            sweeps: 1,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub mass: f64,
    pub min_eta: f64,
    pub max_eta: f64,
}

impl TrajectorySample {
    pub fn of(state: &FilmState) -> Self {
        Self { time: state.time, mass: state.mass(), min_eta: state.min_eta(), max_eta: state.max_eta() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub snapshots: Vec<FilmState>,
    pub last: FilmState,
}

/// Flux law `Q = M eta_111 + R` evaluated node by node.
pub trait FluxModel {
    /// Returns `(M, R)` at every node for thickness `eta` with third
    /// derivative `eta_xxx`.
    fn split(&mut self, eta: &[f64], eta_xxx: &[f64], x1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;

    /// Called once a step has been accepted.
    fn accept(&mut self) {}
}

/// Advances `state0` to `opts.t_end`.
pub fn evolve<F: FluxModel>(state0: &FilmState, model: &mut F, opts: &EvolveOptions) -> Result<Trajectory> {
    state0.validate()?;
    if !(opts.t_end >= state0.time) {
        return Err(Error::InvalidParameter(format!("end time {} precedes start {}", opts.t_end, state0.time)));
    }
    let n = state0.len();
    let h = state0.spacing();
    let d3 = third_derivative_matrix(n, h, opts.third);
    let mut state = state0.clone();
    let mut samples = vec![TrajectorySample::of(&state)];
    let mut snapshots = Vec::new();
    if opts.snapshot_every > 0 {
        snapshots.push(state.clone());
    }
    let mut steps = 0usize;
    while state.time < opts.t_end {
        let eta_xxx = third_derivative(&state.eta, h, opts.third);
        let (mut m, mut r) = model.split(&state.eta, &eta_xxx, &state.x1)?;
        let mut dt = match opts.dt {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Advective { cfl, max_dt } => {
                let speed = state.eta.iter().zip(&r).map(|(e, r)| 2.0 * (r / e).abs()).fold(0.0, f64::max);
                if speed > 0.0 {
                    max_dt.min(cfl * h / speed)
                } else {
                    max_dt
                }
            }
        };
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let remaining = opts.t_end - state.time;
        if dt >= remaining * (1.0 - 1e-12) {
            dt = remaining;
        }
        let mut next = implicit_step(&state.eta, &eta_xxx, &m, &r, &d3, h, dt)?;
        for _ in 1..opts.sweeps.max(1) {
            let xxx = third_derivative(&next, h, opts.third);
            (m, r) = model.split(&next, &xxx, &state.x1)?;
            next = implicit_step(&state.eta, &eta_xxx, &m, &r, &d3, h, dt)?;
        }
        state.eta = next;
        state.time = if dt == remaining { opts.t_end } else { state.time + dt };
        model.accept();
        steps += 1;
        let min = state.min_eta();
        if !(min >= opts.floor) {
            return Err(Error::ThicknessBlowdown { time: state.time, min_eta: min, floor: opts.floor });
        }
        samples.push(TrajectorySample::of(&state));
        if opts.snapshot_every > 0 && steps.is_multiple_of(opts.snapshot_every) {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory { samples, snapshots, last: state })
}

/// Solves `(I + dt D1 diag(M) D3) eta_new = eta - dt D1 R` for the increment
/// `eta_new - eta`; the explicit part reuses `eta_xxx` so a flat film stays flat
/// to the last bit.
fn implicit_step(
    eta: &[f64],
    eta_xxx: &[f64],
    m: &[f64],
    r: &[f64],
    d3: &DMatrix<f64>,
    h: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = eta.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let c = dt / (2.0 * h);
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..n {
            a[(i, j)] = c * (m[ip] * d3[(ip, j)] - m[im] * d3[(im, j)]);
        }
    }
    let flux: Vec<f64> = m.iter().zip(eta_xxx).zip(r).map(|((m, x), r)| m * x + r).collect();
    let b = DVector::from_iterator(n, d1(&flux, h).into_iter().map(|d| -dt * d));
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let x = a.lu().solve(&b).ok_or_else(|| Error::NonConvergence {
        iterations: 0,
        residual: f64::INFINITY,
        history: vec![],
    })?;
    Ok(eta.iter().zip(x.iter()).map(|(e, d)| e + d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Pure(f64);

    impl FluxModel for Pure {
        fn split(&mut self, eta: &[f64], _: &[f64], _: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
            Ok((eta.iter().map(|e| self.0 * e.powi(3)).collect(), vec![0.0; eta.len()]))
        }
    }

    #[test]
    fn stencils_differentiate_a_sine() {
        let n = 64;
        let s = FilmState::periodic(n, 1.0, |x| 2.0 + (2.0 * PI * x).sin()).unwrap();
        let exact: Vec<f64> = s.x1.iter().map(|x| -(2.0 * PI).powi(3) * (2.0 * PI * x).cos()).collect();
        let h = s.spacing();
        let err =
            |kind| third_derivative(&s.eta, h, kind).iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err(ThirdDerivative::Spectral) < 1e-8);
        assert!(err(ThirdDerivative::FourthOrder) < err(ThirdDerivative::ComposedCentered) / 10.0);
    }

    #[test]
    fn matrix_matches_stencil() {
        let s = FilmState::periodic(16, 2.0, |x| 1.0 + 0.3 * (PI * x).cos() + 0.1 * (3.0 * PI * x).sin()).unwrap();
        for kind in [ThirdDerivative::ComposedCentered, ThirdDerivative::FourthOrder, ThirdDerivative::Spectral] {
            let m = third_derivative_matrix(16, s.spacing(), kind);
            let direct = third_derivative(&s.eta, s.spacing(), kind);
            let via = &m * DVector::from_vec(s.eta.clone());
            for i in 0..16 {
                assert_relative_eq!(via[i], direct[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn composed_stencil_is_d1_cubed() {
        let s = FilmState::periodic(20, 1.0, |x| 1.0 + (x * 7.0).sin().powi(2)).unwrap();
        let h = s.spacing();
        let thrice = d1(&d1(&d1(&s.eta, h), h), h);
        let direct = third_derivative(&s.eta, h, ThirdDerivative::ComposedCentered);
        for i in 0..20 {
            assert_relative_eq!(thrice[i], direct[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn flat_film_is_stationary() {
        let s = FilmState::periodic(32, 1.0, |_| 0.7).unwrap();
        let opts = EvolveOptions { t_end: 0.1, dt: DtPolicy::Fixed { dt: 0.01 }, ..Default::default() };
        let t = evolve(&s, &mut Pure(0.5), &opts).unwrap();
        assert!(t.last.eta.iter().all(|e| (e - 0.7).abs() < 1e-12));
        assert_eq!(t.last.time, 0.1);
    }

    #[test]
    fn mass_is_conserved() {
        let s =
            FilmState::periodic(64, 1.0, |x| 1.0 + 0.2 * (2.0 * PI * x).cos() + 0.1 * (6.0 * PI * x).sin()).unwrap();
        let opts = EvolveOptions { t_end: 0.01, dt: DtPolicy::Fixed { dt: 1e-4 }, ..Default::default() };
        let t = evolve(&s, &mut Pure(1.0), &opts).unwrap();
        assert_relative_eq!(t.last.mass(), s.mass(), max_relative = 1e-12);
    }

    #[test]
    fn blowdown_is_detected() {
        let s = FilmState::periodic(16, 1.0, |x| 1.0 + 0.5 * (2.0 * PI * x).cos()).unwrap();
        let opts = EvolveOptions { t_end: 1.0, dt: DtPolicy::Fixed { dt: 0.1 }, floor: 0.9, ..Default::default() };
        let r = evolve(&s, &mut Pure(-1e-3), &opts);
        assert!(matches!(r, Err(Error::ThicknessBlowdown { .. })));
    }

    #[test]
    fn rejects_nonpositive_thickness() {
        assert!(FilmState::periodic(16, 1.0, |x| x - 0.5).is_err());
    }
}
