//! Closed lubrication model: a director/order-parameter column at every `x1`
//! node, the film flux assembled from the column velocities, and the
//! thickness update `eta_t = -d1 int_0^eta v1 dx3`.

use serde::{Deserialize, Serialize};

use crate::column::{solve_column_continued, ShearClosure};
pub use crate::column::{ColumnMode, ColumnProfile, ColumnSettings};
use crate::error::{Error, Result};
use crate::film::{self, third_derivative, EvolveOptions, FilmState, FluxModel, Trajectory};
use crate::material::{leslie_coefficients, AnchoringData, MaterialParams};

/// Shear rate `dv1/dx3` from the momentum balance with the free-surface
/// tangential stress condition built in.
pub fn velocity_gradient(
    q: f64,
    theta: f64,
    eta: f64,
    eta_xxx: f64,
    x3: f64,
    bc: &AnchoringData,
    p: &MaterialParams,
) -> Result<f64> {
    let closure = ShearClosure::new(eta, eta_xxx, bc, p)?;
    closure.shear_rate(x3, q, theta, &leslie_coefficients(q, p))
}

/// One column at thickness `eta` and `eta_111 = eta_xxx`.
pub fn column_bvp(
    eta: f64,
    eta_xxx: f64,
    bc: &AnchoringData,
    p: &MaterialParams,
    settings: &ColumnSettings,
    guess: Option<&ColumnProfile>,
) -> Result<ColumnProfile> {
    solve_column_continued(eta, eta_xxx, bc, p, settings, guess)
}

/// `int_0^eta v1 dx3` from the nodal velocity and shear rate, integrating the
/// piecewise cubic Hermite interpolant exactly.
pub fn flux(column: &ColumnProfile) -> f64 {
    let x = &column.x3;
    let mut total = 0.0;
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        total += 0.5 * h * (column.v1[i] + column.v1[i + 1]) + h * h / 12.0 * (column.v13[i] - column.v13[i + 1]);
    }
    total
}

/// `int_0^eta 2 (eta - x3)^2 / f_A dx3`, the coefficient of `eta_111` in the
/// flux.
pub fn mobility(x3: &[f64], fa: &[f64]) -> f64 {
    let eta = x3[x3.len() - 1];
    let g: Vec<f64> = x3.iter().zip(fa).map(|(x, f)| 2.0 * (eta - x) * (eta - x) / f).collect();
    nodal_integral(x3, &g)
}

/// Composite Simpson over nodal values, closing an odd interval count with
/// the three-eighths rule.
pub(crate) fn nodal_integral(x: &[f64], g: &[f64]) -> f64 {
    let n = x.len();
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * (x[1] - x[0]) * (g[0] + g[1]),
        _ => {}
    }
    let simpson = |lo: usize, hi: usize| {
        let mut s = 0.0;
        let mut i = lo;
        while i + 2 <= hi {
            let h = x[i + 2] - x[i];
            s += h / 6.0 * (g[i] + 4.0 * g[i + 1] + g[i + 2]);
            i += 2;
        }
        s
    };
    if (n - 1).is_multiple_of(2) {
        simpson(0, n - 1)
    } else {
        let k = n - 4;
        let h = (x[n - 1] - x[k]) / 3.0;
        simpson(0, k) + 3.0 * h / 8.0 * (g[k] + 3.0 * g[k + 1] + 3.0 * g[k + 2] + g[k + 3])
    }
}

/// Nodal `f_A` of a Q-tensor column.
pub fn column_viscosity(column: &ColumnProfile, p: &MaterialParams) -> Vec<f64> {
    column.theta.iter().zip(&column.q).map(|(&t, &q)| leslie_coefficients(q, p).f_a(t)).collect()
}

/// Film together with its column solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LubricationField {
    pub film: FilmState,
    pub columns: Vec<ColumnProfile>,
    pub residuals: Vec<f64>,
}

/// Per-node overrides of the otherwise uniform data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LubricationSetup {
    pub settings: ColumnSettingsSer,
    /// Surface order parameter at each `x1` node.
    pub q2_profile: Option<Vec<f64>>,
    /// Activity at each `x1` node.
    pub activity_profile: Option<Vec<f64>>,
}

/// Serializable subset of [`ColumnSettings`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnSettingsSer {
    pub nodes: usize,
    pub mode: ColumnMode,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ColumnSettingsSer {
    fn default() -> Self {
        let s = ColumnSettings::default();
        Self { nodes: s.nodes, mode: s.mode, tol: s.bvp.tol, max_iter: s.bvp.max_iter }
    }
}

impl From<ColumnSettingsSer> for ColumnSettings {
    fn from(s: ColumnSettingsSer) -> Self {
        let mut c = ColumnSettings { nodes: s.nodes, mode: s.mode, ..Default::default() };
        c.bvp.tol = s.tol;
        c.bvp.max_iter = s.max_iter;
        c
    }
}

fn node_data(
    n: usize,
    bc: &AnchoringData,
    p: &MaterialParams,
    setup: &LubricationSetup,
) -> Result<(Vec<AnchoringData>, Vec<MaterialParams>)> {
    let check = |v: &Option<Vec<f64>>, name: &str| match v {
        Some(t) if t.len() != n => {
            Err(Error::InvalidParameter(format!("{name} has {} entries for {n} film nodes", t.len())))
        }
        _ => Ok(()),
    };
    check(&setup.q2_profile, "q2 profile")?;
    check(&setup.activity_profile, "activity profile")?;
    let bcs = (0..n).map(|i| AnchoringData { q2: setup.q2_profile.as_ref().map_or(bc.q2, |t| t[i]), ..*bc }).collect();
    let ps = (0..n)
        .map(|i| MaterialParams { activity: setup.activity_profile.as_ref().map_or(p.activity, |t| t[i]), ..*p })
        .collect();
    Ok((bcs, ps))
}

/// A per-node column solver returning the profile and its nodal `f_A`.
pub(crate) trait ColumnSolver: Sync {
    fn solve(
        &self,
        index: usize,
        eta: f64,
        eta_xxx: f64,
        guess: Option<&ColumnProfile>,
    ) -> Result<(ColumnProfile, Vec<f64>)>;
}

struct QSolver {
    bcs: Vec<AnchoringData>,
    params: Vec<MaterialParams>,
    settings: ColumnSettings,
}

impl ColumnSolver for QSolver {
    fn solve(
        &self,
        i: usize,
        eta: f64,
        eta_xxx: f64,
        guess: Option<&ColumnProfile>,
    ) -> Result<(ColumnProfile, Vec<f64>)> {
        let col = column_bvp(eta, eta_xxx, &self.bcs[i], &self.params[i], &self.settings, guess)?;
        let fa = column_viscosity(&col, &self.params[i]);
        Ok((col, fa))
    }
}

/// Flux law assembled column by column; warm-starts each column from the
/// last accepted step.
pub(crate) struct ColumnFlux<S> {
    pub solver: S,
    pub accepted: Vec<Option<ColumnProfile>>,
    pending: Vec<ColumnProfile>,
    /// Largest Newton iteration count of each accepted step.
    pub newton_iterations: Vec<usize>,
}

impl<S: ColumnSolver> ColumnFlux<S> {
    pub fn new(solver: S, start: Vec<Option<ColumnProfile>>) -> Self {
        Self { solver, accepted: start, pending: Vec::new(), newton_iterations: Vec::new() }
    }

    pub fn solve_all(&self, eta: &[f64], eta_xxx: &[f64], x1: &[f64]) -> Result<Vec<(ColumnProfile, Vec<f64>)>> {
        let work = |i: usize| {
            self.solver.solve(i, eta[i], eta_xxx[i], self.accepted[i].as_ref()).map_err(|e| Error::Column {
                index: i,
                x1: x1[i],
                source: Box::new(e),
            })
        };
        #[cfg(feature = "parallel")]
        let out: Vec<Result<_>> = {
            use rayon::prelude::*;
            (0..eta.len()).into_par_iter().map(work).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let out: Vec<Result<_>> = (0..eta.len()).map(work).collect();
        out.into_iter().collect()
    }
}

impl<S: ColumnSolver> FluxModel for ColumnFlux<S> {
    fn split(&mut self, eta: &[f64], eta_xxx: &[f64], x1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let solved = self.solve_all(eta, eta_xxx, x1)?;
        let mut m = Vec::with_capacity(eta.len());
        let mut r = Vec::with_capacity(eta.len());
        self.pending.clear();
        for (i, (col, fa)) in solved.into_iter().enumerate() {
            let mi = mobility(&col.x3, &fa);
            m.push(mi);
            r.push(flux(&col) - mi * eta_xxx[i]);
            self.pending.push(col);
        }
        Ok((m, r))
    }

    fn accept(&mut self) {
        let iterations = self.pending.iter().map(|c| c.iterations).max().unwrap_or(0);
        self.newton_iterations.push(iterations);
        for (slot, col) in self.accepted.iter_mut().zip(self.pending.drain(..)) {
            *slot = Some(col);
        }
    }
}

/// Solves every column of `film` and packs the result.
pub fn initialize(
    film: &FilmState,
    bc: &AnchoringData,
    p: &MaterialParams,
    setup: &LubricationSetup,
    third: film::ThirdDerivative,
) -> Result<LubricationField> {
    film.validate()?;
    let (bcs, params) = node_data(film.len(), bc, p, setup)?;
    let solver = QSolver { bcs, params, settings: setup.settings.into() };
    let fluxes = ColumnFlux::new(solver, vec![None; film.len()]);
    field_from(film, &fluxes, third)
}

pub(crate) fn field_from<S: ColumnSolver>(
    film: &FilmState,
    fluxes: &ColumnFlux<S>,
    third: film::ThirdDerivative,
) -> Result<LubricationField> {
    let xxx = third_derivative(&film.eta, film.spacing(), third);
    let columns: Vec<ColumnProfile> = fluxes.solve_all(&film.eta, &xxx, &film.x1)?.into_iter().map(|c| c.0).collect();
    let residuals = columns.iter().map(|c| c.residual).collect();
    Ok(LubricationField { film: film.clone(), columns, residuals })
}

/// Trajectory of the lubrication model with the final column field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LubricationRun {
    pub trajectory: Trajectory,
    pub last: LubricationField,
    /// Largest per-column Newton iteration count at every step.
    pub newton_iterations: Vec<usize>,
}

/// Method-of-lines evolution: columns at the current thickness, flux, then
/// the semi-implicit thickness update.
pub fn evolve(
    field0: &LubricationField,
    p: &MaterialParams,
    bc: &AnchoringData,
    setup: &LubricationSetup,
    opts: &EvolveOptions,
) -> Result<LubricationRun> {
    let film0 = &field0.film;
    film0.validate()?;
    let (bcs, params) = node_data(film0.len(), bc, p, setup)?;
    let solver = QSolver { bcs, params, settings: setup.settings.into() };
    let start = if field0.columns.len() == film0.len() {
        field0.columns.iter().cloned().map(Some).collect()
    } else {
        vec![None; film0.len()]
    };
    run(film0, ColumnFlux::new(solver, start), opts)
}

pub(crate) fn run<S: ColumnSolver>(
    film0: &FilmState,
    mut fluxes: ColumnFlux<S>,
    opts: &EvolveOptions,
) -> Result<LubricationRun> {
    let trajectory = film::evolve(film0, &mut fluxes, opts)?;
    let last = field_from(&trajectory.last, &fluxes, opts.third)?;
    Ok(LubricationRun { trajectory, last, newton_iterations: fluxes.newton_iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::film::{DtPolicy, ThirdDerivative};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn active() -> MaterialParams {
        MaterialParams {
            xi: 0.8,
            a2: 4.0,
            c2: 4.0,
            l1: 0.1,
            activity: 0.05,
            lambda1: 0.5,
            zeta: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn passive_without_pressure_gradient_is_at_rest() {
        let p = MaterialParams { activity: 0.0, ..active() };
        let bc = AnchoringData::new(0.1, 0.4, 0.5, 0.9);
        assert_eq!(velocity_gradient(0.7, 0.3, 1.0, 0.0, 0.4, &bc, &p).unwrap(), 0.0);
        assert_eq!(velocity_gradient(0.7, 0.3, 1.0, 2.5, 1.0, &bc, &p).unwrap(), 0.0);
    }

    #[test]
    fn flux_of_linear_profile() {
        let x3: Vec<f64> = (0..11).map(|i| i as f64 * 0.15).collect();
        let v1: Vec<f64> = x3.iter().map(|x| 0.4 * x / 1.5).collect();
        let col = ColumnProfile::at_rest(x3.clone(), vec![0.0; 11], vec![1.0; 11], vec![0.0; 11], vec![0.0; 11]);
        let col = ColumnProfile { v1, v13: vec![0.4 / 1.5; 11], ..col };
        assert_relative_eq!(flux(&col), 0.4 * 1.5 / 2.0, epsilon = 1e-15);
        assert_eq!(flux(&ColumnProfile { v1: vec![0.0; 11], v13: vec![0.0; 11], ..col }), 0.0);
    }

    #[test]
    fn mobility_of_uniform_viscosity() {
        for n in [11, 12] {
            let x3: Vec<f64> = (0..n).map(|i| 0.7 * i as f64 / (n - 1) as f64).collect();
            assert_relative_eq!(mobility(&x3, &vec![2.0; n]), 0.7f64.powi(3) / 3.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn column_depends_continuously_on_curvature_gradient() {
        let p = active();
        let bc = AnchoringData::new(0.1, 0.4, 0.5, 0.9);
        let s = ColumnSettings::default();
        let a = column_bvp(0.2, 1.0, &bc, &p, &s, None).unwrap();
        let b = column_bvp(0.2, 1.0 + 1e-4, &bc, &p, &s, Some(&a)).unwrap();
        let d = a.theta.iter().zip(&b.theta).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d > 0.0 && d < 1e-3, "{d}");
        assert!(b.iterations <= 5);
    }

    #[test]
    fn flat_passive_film_is_stationary() {
        let p = MaterialParams { activity: 0.0, ..active() };
        let q0 = p.reaction_equilibrium();
        let bc = AnchoringData::new(0.3, 0.3, q0, q0);
        let film = FilmState::periodic(16, 1.0, |_| 0.5).unwrap();
        let setup =
            LubricationSetup { settings: ColumnSettingsSer { nodes: 21, ..Default::default() }, ..Default::default() };
        let field = initialize(&film, &bc, &p, &setup, ThirdDerivative::FourthOrder).unwrap();
        let opts = EvolveOptions {
            t_end: 1.0,
            dt: DtPolicy::Fixed { dt: 0.1 },
            third: ThirdDerivative::FourthOrder,
            ..Default::default()
        };
        let run = evolve(&field, &p, &bc, &setup, &opts).unwrap();
        assert!(run.trajectory.last.eta.iter().all(|e| (e - 0.5).abs() < 1e-10));
    }

    #[test]
    fn column_errors_carry_location() {
        let p = active();
        let bc = AnchoringData::new(0.1, 0.4, 0.5, 0.9);
        let film = FilmState::periodic(8, 1.0, |x| 1.0 + 0.1 * (2.0 * PI * x).cos()).unwrap();
        let setup = LubricationSetup { q2_profile: Some(vec![0.9; 3]), ..Default::default() };
        assert!(initialize(&film, &bc, &p, &setup, ThirdDerivative::FourthOrder).is_err());
    }
}
