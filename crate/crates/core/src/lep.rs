//! Active Leslie-Ericksen-Parodi thin-film model: a director-only column
//! with constant order, coupled to the same thickness equation.

use serde::{Deserialize, Serialize};

use crate::column::{integrate_velocity, ColumnProfile, ColumnSettings};
use crate::error::{Error, Result};
use crate::film::{EvolveOptions, FilmState};
use crate::lubrication::{self, ColumnFlux, ColumnSolver, LubricationField, LubricationRun};
use crate::material::{lep_param_map, leslie_coefficients, LepParams, LeslieCoefficients, MaterialParams};
use crate::numerics::bvp::{self, BvpSystem};

const SINGULAR_VISCOSITY: f64 = 1e-12;

/// Viscosities, Frank modulus and active stress of a director-only film.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LepModel {
    pub coeffs: LeslieCoefficients,
    pub k: f64,
    pub zeta: f64,
    pub delta_chi: f64,
}

impl LepModel {
    /// The model equivalent to a Q-tensor film held at order `q`.
    pub fn mapped(q: f64, p: &MaterialParams) -> Self {
        let LepParams { zeta, k, delta_chi, .. } = lep_param_map(q, p);
        Self { coeffs: leslie_coefficients(q, p), k, zeta, delta_chi }
    }

    pub fn from_alphas(alpha: [f64; 6], k: f64, zeta: f64, delta_chi: f64) -> Self {
        Self { coeffs: LeslieCoefficients::from_alphas(alpha), k, zeta, delta_chi }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!("Frank modulus must be positive, got {}", self.k)));
        }
        if self.coeffs.alpha.iter().any(|a| !a.is_finite()) || !self.zeta.is_finite() || !self.delta_chi.is_finite() {
            return Err(Error::InvalidParameter("LEP coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Shear rate of the LEP momentum balance at fixed thickness.
#[derive(Debug, Clone, Copy)]
struct LepClosure {
    eta: f64,
    eta_xxx: f64,
    stress: f64,
    surface_term: f64,
}

impl LepClosure {
    fn new(eta: f64, eta_xxx: f64, theta2: f64, m: &LepModel) -> Result<Self> {
        let stress = m.zeta * m.delta_chi;
        let s2 = (2.0 * theta2).sin();
        let surface_term = if stress == 0.0 || s2 == 0.0 {
            0.0
        } else {
            let fb2 = m.coeffs.f_b(theta2);
            if fb2.abs() < SINGULAR_VISCOSITY {
                return Err(Error::BoundaryClosureSingularity(fb2));
            }
            stress * (m.coeffs.f_a(theta2) / fb2 - 1.0) * s2
        };
        Ok(Self { eta, eta_xxx, stress, surface_term })
    }

    fn shear_rate(&self, x3: f64, theta: f64, coeffs: &LeslieCoefficients) -> Result<f64> {
        let fa = coeffs.f_a(theta);
        if fa.abs() < SINGULAR_VISCOSITY {
            return Err(Error::ViscositySingularity { x3, q: f64::NAN, theta, value: fa });
        }
        Ok((2.0 * self.eta_xxx * (self.eta - x3) + self.stress * (2.0 * theta).sin() + self.surface_term) / fa)
    }
}

// State: [theta, 2K theta'].
struct LepColumn<'a> {
    closure: LepClosure,
    model: &'a LepModel,
    theta_bc: (f64, f64),
}

impl BvpSystem for LepColumn<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn n_left(&self) -> usize {
        1
    }

    fn rhs(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let c = &self.model.coeffs;
        let v13 = self.closure.shear_rate(x, y[0], c)?;
        dy[0] = y[1] / (2.0 * self.model.k);
        dy[1] = -c.torque(y[0]) * v13;
        Ok(())
    }

    fn bc_left(&self, ya: &[f64], r: &mut [f64]) {
        r[0] = ya[0] - self.theta_bc.0;
    }

    fn bc_right(&self, yb: &[f64], r: &mut [f64]) {
        r[0] = yb[0] - self.theta_bc.1;
    }
}

/// Director column of the LEP model. The returned profile has empty `q`
/// and `q_x3`.
pub fn lep_column_bvp(
    eta: f64,
    eta_xxx: f64,
    theta_bc: (f64, f64),
    model: &LepModel,
    settings: &ColumnSettings,
    guess: Option<&ColumnProfile>,
) -> Result<ColumnProfile> {
    model.validate()?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("film thickness must be positive, got {eta}")));
    }
    if !eta_xxx.is_finite() || !theta_bc.0.is_finite() || !theta_bc.1.is_finite() {
        return Err(Error::InvalidParameter("column data must be finite".into()));
    }
    if settings.nodes < 3 {
        return Err(Error::InvalidParameter(format!("column needs at least 3 nodes, got {}", settings.nodes)));
    }
    let closure = LepClosure::new(eta, eta_xxx, theta_bc.1, model)?;
    let sys = LepColumn { closure, model, theta_bc };
    let mesh = bvp::uniform_mesh(0.0, eta, settings.nodes);
    let two_k = 2.0 * model.k;
    let y0: Vec<f64> = match guess {
        Some(g) => mesh
            .iter()
            .flat_map(|&x| {
                let s = x / eta * g.eta;
                let i = g.x3.partition_point(|&xi| xi <= s).clamp(1, g.nodes() - 1) - 1;
                let t = ((s - g.x3[i]) / (g.x3[i + 1] - g.x3[i])).clamp(0.0, 1.0);
                let lerp = |v: &[f64]| v[i] + t * (v[i + 1] - v[i]);
                [lerp(&g.theta), two_k * lerp(&g.theta_x3) * g.eta / eta]
            })
            .collect(),
        None => {
            let slope = (theta_bc.1 - theta_bc.0) / eta;
            mesh.iter().flat_map(|&x| [theta_bc.0 + slope * x, two_k * slope]).collect()
        }
    };
    let sol = bvp::solve(&sys, &mesh, &y0, &settings.bvp)?;
    let theta = sol.component(0);
    let c = &model.coeffs;
    let mut v13 = Vec::with_capacity(mesh.len());
    for (&x, &t) in mesh.iter().zip(&theta) {
        v13.push(closure.shear_rate(x, t, c)?);
    }
    let tm = sol.mid_component(0);
    let mut v13_mid = Vec::with_capacity(mesh.len() - 1);
    for i in 0..mesh.len() - 1 {
        v13_mid.push(closure.shear_rate(0.5 * (mesh[i] + mesh[i + 1]), tm[i], c)?);
    }
    let fa0 = c.f_a(theta[0]);
    for (i, &t) in theta.iter().enumerate() {
        let fa = c.f_a(t);
        if fa.signum() != fa0.signum() {
            return Err(Error::ViscositySingularity { x3: mesh[i], q: f64::NAN, theta: t, value: fa });
        }
    }
    Ok(ColumnProfile {
        v1: integrate_velocity(&mesh, &v13, &v13_mid),
        theta_x3: sol.derivative(0),
        x3: mesh,
        theta,
        q: Vec::new(),
        v13,
        q_x3: Vec::new(),
        eta,
        residual: sol.residual,
        iterations: sol.iterations,
    })
}

/// LEP column at order `q` with the mapped parameters and viscosities.
pub fn lep_column_mapped(
    eta: f64,
    eta_xxx: f64,
    theta_bc: (f64, f64),
    q: f64,
    p: &MaterialParams,
    settings: &ColumnSettings,
) -> Result<ColumnProfile> {
    lep_column_bvp(eta, eta_xxx, theta_bc, &LepModel::mapped(q, p), settings, None)
}

struct LepSolver {
    model: LepModel,
    theta_bc: (f64, f64),
    settings: ColumnSettings,
}

impl ColumnSolver for LepSolver {
    fn solve(
        &self,
        _: usize,
        eta: f64,
        eta_xxx: f64,
        guess: Option<&ColumnProfile>,
    ) -> Result<(ColumnProfile, Vec<f64>)> {
        let col = lep_column_bvp(eta, eta_xxx, self.theta_bc, &self.model, &self.settings, guess)?;
        let fa = col.theta.iter().map(|&t| self.model.coeffs.f_a(t)).collect();
        Ok((col, fa))
    }
}

/// Thickness evolution driven by LEP columns.
pub fn lep_evolve(
    film0: &FilmState,
    model: &LepModel,
    theta_bc: (f64, f64),
    settings: &ColumnSettings,
    opts: &EvolveOptions,
) -> Result<LubricationRun> {
    film0.validate()?;
    let solver = LepSolver { model: *model, theta_bc, settings: *settings };
    lubrication::run(film0, ColumnFlux::new(solver, vec![None; film0.len()]), opts)
}

/// Columns of the LEP model on every node of `film`.
pub fn lep_field(
    film: &FilmState,
    model: &LepModel,
    theta_bc: (f64, f64),
    settings: &ColumnSettings,
    opts: &EvolveOptions,
) -> Result<LubricationField> {
    film.validate()?;
    let solver = LepSolver { model: *model, theta_bc, settings: *settings };
    lubrication::field_from(film, &ColumnFlux::new(solver, vec![None; film.len()]), opts.third)
}
