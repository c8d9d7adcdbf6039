//! Vertical column problem of the Q-tensor thin film: director angle and
//! order parameter across the film at a fixed `x1`, with the shear rate
//! eliminated through the momentum balance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{leslie_coefficients, AnchoringData, LeslieCoefficients, MaterialParams};
use crate::numerics::bvp::{self, BvpOptions, BvpSolution, BvpSystem};

/// Default number of collocation nodes across the film.
pub const DEFAULT_NODES: usize = 201;

const SINGULAR_VISCOSITY: f64 = 1e-10;

/// Discretised `theta(x3)`, `q(x3)` and `v1(x3)` on one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub x3: Vec<f64>,
    pub theta: Vec<f64>,
    pub q: Vec<f64>,
    pub v1: Vec<f64>,
    /// Shear rate `dv1/dx3` at the nodes.
    pub v13: Vec<f64>,
    pub theta_x3: Vec<f64>,
    pub q_x3: Vec<f64>,
    pub eta: f64,
    /// Max-norm of the discrete collocation residual (0 for closed forms).
    pub residual: f64,
    pub iterations: usize,
}

impl ColumnProfile {
    pub fn nodes(&self) -> usize {
        self.x3.len()
    }

    /// Profile at rest with the given fields.
    pub(crate) fn at_rest(x3: Vec<f64>, theta: Vec<f64>, q: Vec<f64>, theta_x3: Vec<f64>, q_x3: Vec<f64>) -> Self {
        let n = x3.len();
        let eta = x3[n - 1];
        Self { x3, theta, q, v1: vec![0.0; n], v13: vec![0.0; n], theta_x3, q_x3, eta, residual: 0.0, iterations: 0 }
    }

    pub fn max_abs_v1(&self) -> f64 {
        self.v1.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// How the order parameter is treated in a column solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnMode {
    /// Coupled director and order-parameter problem.
    #[default]
    Full,
    /// `q` held at `q1 = q2`; only the director equation is solved.
    ConstantQ,
    /// Both `q` and `theta` held at their substrate values (no solve).
    Frozen,
    /// As `Full`, with `v1` carried as a third unknown instead of being
    /// reconstructed afterwards.
    ThreeField,
}

#[derive(Debug, Clone, Copy)]
pub struct ColumnSettings {
    pub nodes: usize,
    pub mode: ColumnMode,
    pub bvp: BvpOptions,
    /// Smallest activity increment tried during continuation, relative to the
    /// target activity.
    pub min_continuation_step: f64,
}

impl Default for ColumnSettings {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES, mode: ColumnMode::Full, bvp: BvpOptions::default(), min_continuation_step: 1e-4 }
    }
}

/// Shear-rate closure from the momentum balance and the tangential stress
/// condition at the free surface.
#[derive(Debug, Clone, Copy)]
pub struct ShearClosure {
    params: MaterialParams,
    eta: f64,
    eta_xxx: f64,
    /// Activity times the surface stress term carried through the depth.
    surface_term: f64,
}

impl ShearClosure {
    pub fn new(eta: f64, eta_xxx: f64, bc: &AnchoringData, p: &MaterialParams) -> Result<Self> {
        let surface_term = if p.activity == 0.0 {
            0.0
        } else {
            let c2 = leslie_coefficients(bc.q2, p);
            let fb2 = c2.f_b(bc.theta2);
            let b2 = p.active_stress_factor(bc.q2) * (2.0 * bc.theta2).sin();
            if b2 == 0.0 {
                0.0
            } else {
                if fb2.abs() < SINGULAR_VISCOSITY {
                    return Err(Error::BoundaryClosureSingularity(fb2));
                }
                p.activity * b2 * c2.torque(bc.theta2) / fb2
            }
        };
        Ok(Self { params: *p, eta, eta_xxx, surface_term })
    }

    pub fn shear_rate(&self, x3: f64, q: f64, theta: f64, coeffs: &LeslieCoefficients) -> Result<f64> {
        let fa = coeffs.f_a(theta);
        if fa.abs() < SINGULAR_VISCOSITY {
            return Err(Error::ViscositySingularity { x3, q, theta, value: fa });
        }
        let p = &self.params;
        let bulk = p.activity * p.active_stress_factor(q) * (2.0 * theta).sin();
        Ok((2.0 * self.eta_xxx * (self.eta - x3) - bulk - self.surface_term) / fa)
    }
}

struct QColumn {
    closure: ShearClosure,
    params: MaterialParams,
    bc: AnchoringData,
    carry_velocity: bool,
}

impl QColumn {
    fn shear(&self, x3: f64, theta: f64, q: f64) -> Result<(f64, LeslieCoefficients)> {
        let coeffs = leslie_coefficients(q, &self.params);
        Ok((self.closure.shear_rate(x3, q, theta, &coeffs)?, coeffs))
    }
}

// State: [theta, q^2 theta', q, q' (, v1)].
impl BvpSystem for QColumn {
    fn dim(&self) -> usize {
        if self.carry_velocity {
            5
        } else {
            4
        }
    }

    fn n_left(&self) -> usize {
        if self.carry_velocity {
            3
        } else {
            2
        }
    }

    fn rhs(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (theta, flux, q, dq) = (y[0], y[1], y[2], y[3]);
        if q == 0.0 {
            return Err(Error::Domain(format!("order parameter vanished at x3 = {x}")));
        }
        let p = &self.params;
        let (v13, coeffs) = self.shear(x, theta, q)?;
        let dtheta = flux / (q * q);
        dy[0] = dtheta;
        dy[1] = -coeffs.torque(theta) * v13 / (4.0 * p.l1);
        dy[2] = dq;
        dy[3] = 4.0 * q * dtheta * dtheta
            - p.xi * (q + 2.0) / (3.0 * p.l1 * p.gamma_rot) * (2.0 * theta).sin() * v13
            - q / p.l1 * (p.a2 - 0.5 * p.c2 * q * q)
            - p.activity * p.lambda1 / p.l1 * q;
        if self.carry_velocity {
            dy[4] = v13;
        }
        Ok(())
    }

    fn bc_left(&self, ya: &[f64], r: &mut [f64]) {
        r[0] = ya[0] - self.bc.theta1;
        r[1] = ya[2] - self.bc.q1;
        if self.carry_velocity {
            r[2] = ya[4];
        }
    }

    fn bc_right(&self, yb: &[f64], r: &mut [f64]) {
        r[0] = yb[0] - self.bc.theta2;
        r[1] = yb[2] - self.bc.q2;
    }
}

struct ConstQColumn {
    closure: ShearClosure,
    coeffs: LeslieCoefficients,
    q: f64,
    l1: f64,
    bc: AnchoringData,
}

// State: [theta, q^2 theta'].
impl BvpSystem for ConstQColumn {
    fn dim(&self) -> usize {
        2
    }

    fn n_left(&self) -> usize {
        1
    }

    fn rhs(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let v13 = self.closure.shear_rate(x, self.q, y[0], &self.coeffs)?;
        dy[0] = y[1] / (self.q * self.q);
        dy[1] = -self.coeffs.torque(y[0]) * v13 / (4.0 * self.l1);
        Ok(())
    }

    fn bc_left(&self, ya: &[f64], r: &mut [f64]) {
        r[0] = ya[0] - self.bc.theta1;
    }

    fn bc_right(&self, yb: &[f64], r: &mut [f64]) {
        r[0] = yb[0] - self.bc.theta2;
    }
}

/// Velocity from the shear rate, using Simpson's rule on each interval with
/// the collocation midpoint values.
pub(crate) fn integrate_velocity(x: &[f64], v13: &[f64], v13_mid: &[f64]) -> Vec<f64> {
    let mut v1 = vec![0.0; x.len()];
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        v1[i + 1] = v1[i] + h / 6.0 * (v13[i] + 4.0 * v13_mid[i] + v13[i + 1]);
    }
    v1
}

fn check_fa_sign(x: &[f64], theta: &[f64], q: &[f64], p: &MaterialParams) -> Result<()> {
    let fa: Vec<f64> = theta.iter().zip(q).map(|(&t, &qq)| leslie_coefficients(qq, p).f_a(t)).collect();
    for i in 1..fa.len() {
        if fa[i].signum() != fa[0].signum() {
            return Err(Error::ViscositySingularity { x3: x[i], q: q[i], theta: theta[i], value: fa[i] });
        }
    }
    Ok(())
}

fn check_inputs(eta: f64, eta_xxx: f64, bc: &AnchoringData, p: &MaterialParams, s: &ColumnSettings) -> Result<()> {
    p.validate()?;
    bc.validate()?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("film thickness must be positive, got {eta}")));
    }
    if !eta_xxx.is_finite() {
        return Err(Error::InvalidParameter("third derivative of thickness is not finite".into()));
    }
    if s.nodes < 3 {
        return Err(Error::InvalidParameter(format!("column needs at least 3 nodes, got {}", s.nodes)));
    }
    Ok(())
}

/// Nodal starting guess in the `Full` layout, either from a previous profile
/// (rescaled to the new thickness) or a linear interpolation of the
/// boundary data.
fn initial_state(mesh: &[f64], eta: f64, bc: &AnchoringData, guess: Option<&ColumnProfile>) -> Vec<[f64; 5]> {
    match guess {
        Some(g) => {
            let scale = g.eta / eta;
            mesh.iter()
                .map(|&x| {
                    let s = x / eta * g.eta;
                    let i = g.x3.partition_point(|&xi| xi <= s).clamp(1, g.nodes() - 1) - 1;
                    let t = ((s - g.x3[i]) / (g.x3[i + 1] - g.x3[i])).clamp(0.0, 1.0);
                    let lerp = |v: &[f64]| v[i] + t * (v[i + 1] - v[i]);
                    let q = lerp(&g.q);
                    let flux = lerp(&g.theta_x3) * q * q * scale;
                    [lerp(&g.theta), flux, q, lerp(&g.q_x3) * scale, lerp(&g.v1)]
                })
                .collect()
        }
        None => {
            let qm = 0.5 * (bc.q1 + bc.q2);
            let slope = (bc.theta2 - bc.theta1) / eta;
            let dq = (bc.q2 - bc.q1) / eta;
            mesh.iter()
                .map(|&x| {
                    let t = x / eta;
                    [bc.theta1 + t * (bc.theta2 - bc.theta1), qm * qm * slope, bc.q1 + t * (bc.q2 - bc.q1), dq, 0.0]
                })
                .collect()
        }
    }
}

/// Solves one column at fixed thickness `eta` and third derivative
/// `eta_xxx` of the thickness.
pub fn solve_column(
    eta: f64,
    eta_xxx: f64,
    bc: &AnchoringData,
    p: &MaterialParams,
    settings: &ColumnSettings,
    guess: Option<&ColumnProfile>,
) -> Result<ColumnProfile> {
    check_inputs(eta, eta_xxx, bc, p, settings)?;
    let closure = ShearClosure::new(eta, eta_xxx, bc, p)?;
    let mesh = bvp::uniform_mesh(0.0, eta, settings.nodes);
    let start = initial_state(&mesh, eta, bc, guess);
    match settings.mode {
        ColumnMode::Full | ColumnMode::ThreeField => {
            let three = settings.mode == ColumnMode::ThreeField;
            let sys = QColumn { closure, params: *p, bc: *bc, carry_velocity: three };
            let d = sys.dim();
            let y0: Vec<f64> = start.iter().flat_map(|s| s[..d].to_vec()).collect();
            let sol = bvp::solve(&sys, &mesh, &y0, &settings.bvp)?;
            q_profile(&sys, &sol, eta, p)
        }
        ColumnMode::ConstantQ => {
            if (bc.q1 - bc.q2).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "constant-q column needs q1 = q2, got {} and {}",
                    bc.q1, bc.q2
                )));
            }
            let q = bc.q1;
            if q == 0.0 {
                return Err(Error::Domain("constant-q column with q = 0 has no director equation".into()));
            }
            let sys = ConstQColumn { closure, coeffs: leslie_coefficients(q, p), q, l1: p.l1, bc: *bc };
            let y0: Vec<f64> = start.iter().flat_map(|s| [s[0], s[1]]).collect();
            let sol = bvp::solve(&sys, &mesh, &y0, &settings.bvp)?;
            let theta = sol.component(0);
            let mut v13 = Vec::with_capacity(mesh.len());
            for (i, &x) in mesh.iter().enumerate() {
                v13.push(closure.shear_rate(x, q, theta[i], &sys.coeffs)?);
            }
            let theta_mid = sol.mid_component(0);
            let mut v13_mid = Vec::with_capacity(mesh.len() - 1);
            for i in 0..mesh.len() - 1 {
                let xm = 0.5 * (mesh[i] + mesh[i + 1]);
                v13_mid.push(closure.shear_rate(xm, q, theta_mid[i], &sys.coeffs)?);
            }
            let n = mesh.len();
            let q_nodes = vec![q; n];
            check_fa_sign(&mesh, &theta, &q_nodes, p)?;
            Ok(ColumnProfile {
                v1: integrate_velocity(&mesh, &v13, &v13_mid),
                theta_x3: sol.derivative(0),
                x3: mesh,
                theta,
                q: q_nodes,
                v13,
                q_x3: vec![0.0; n],
                eta,
                residual: sol.residual,
                iterations: sol.iterations,
            })
        }
        ColumnMode::Frozen => frozen_column(&closure, &mesh, bc, p),
    }
}

fn q_profile(sys: &QColumn, sol: &BvpSolution, eta: f64, p: &MaterialParams) -> Result<ColumnProfile> {
    let x = &sol.x;
    let theta = sol.component(0);
    let q = sol.component(2);
    let mut v13 = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        v13.push(sys.shear(x[i], theta[i], q[i])?.0);
    }
    let v1 = if sys.carry_velocity {
        sol.component(4)
    } else {
        let (tm, qm) = (sol.mid_component(0), sol.mid_component(2));
        let mut v13_mid = Vec::with_capacity(x.len() - 1);
        for i in 0..x.len() - 1 {
            v13_mid.push(sys.shear(0.5 * (x[i] + x[i + 1]), tm[i], qm[i])?.0);
        }
        integrate_velocity(x, &v13, &v13_mid)
    };
    check_fa_sign(x, &theta, &q, p)?;
    Ok(ColumnProfile {
        x3: x.clone(),
        theta_x3: sol.derivative(0),
        q_x3: sol.component(3),
        theta,
        q,
        v1,
        v13,
        eta,
        residual: sol.residual,
        iterations: sol.iterations,
    })
}

/// Column with `q = q1` and `theta = theta1` imposed throughout; the shear
/// rate is then explicit and `v1` is a cubic in `x3`.
fn frozen_column(
    closure: &ShearClosure,
    mesh: &[f64],
    bc: &AnchoringData,
    p: &MaterialParams,
) -> Result<ColumnProfile> {
    let coeffs = leslie_coefficients(bc.q1, p);
    let n = mesh.len();
    let mut v13 = Vec::with_capacity(n);
    for &x in mesh {
        v13.push(closure.shear_rate(x, bc.q1, bc.theta1, &coeffs)?);
    }
    let mut v13_mid = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        v13_mid.push(closure.shear_rate(0.5 * (mesh[i] + mesh[i + 1]), bc.q1, bc.theta1, &coeffs)?);
    }
    Ok(ColumnProfile {
        v1: integrate_velocity(mesh, &v13, &v13_mid),
        x3: mesh.to_vec(),
        theta: vec![bc.theta1; n],
        q: vec![bc.q1; n],
        v13,
        theta_x3: vec![0.0; n],
        q_x3: vec![0.0; n],
        eta: mesh[n - 1],
        residual: 0.0,
        iterations: 0,
    })
}

/// Continuous defect of a solved column: max-norm of `S' - f(x, S)` for the
/// piecewise cubic Hermite interpolant of the nodal state, at the quarter
/// points of every interval.
pub fn column_defect(
    profile: &ColumnProfile,
    eta_xxx: f64,
    bc: &AnchoringData,
    p: &MaterialParams,
    mode: ColumnMode,
) -> Result<f64> {
    let closure = ShearClosure::new(profile.eta, eta_xxx, bc, p)?;
    let n = profile.nodes();
    let mut y = Vec::new();
    let state: Box<dyn BvpSystem> = match mode {
        ColumnMode::Full => {
            for i in 0..n {
                let q = profile.q[i];
                y.extend_from_slice(&[profile.theta[i], q * q * profile.theta_x3[i], q, profile.q_x3[i]]);
            }
            Box::new(QColumn { closure, params: *p, bc: *bc, carry_velocity: false })
        }
        ColumnMode::ConstantQ => {
            let q = bc.q1;
            for i in 0..n {
                y.extend_from_slice(&[profile.theta[i], q * q * profile.theta_x3[i]]);
            }
            Box::new(ConstQColumn { closure, coeffs: leslie_coefficients(q, p), q, l1: p.l1, bc: *bc })
        }
        _ => return Err(Error::InvalidParameter(format!("no collocation defect for {mode:?} columns"))),
    };
    let d = state.dim();
    let mut f = vec![0.0; y.len()];
    for i in 0..n {
        state.rhs(profile.x3[i], &y[i * d..(i + 1) * d], &mut f[i * d..(i + 1) * d])?;
    }
    let sol = BvpSolution {
        x: profile.x3.clone(),
        dim: d,
        y,
        f,
        y_mid: Vec::new(),
        f_mid: Vec::new(),
        iterations: profile.iterations,
        residual: profile.residual,
        history: Vec::new(),
    };
    sol.defect(&*state)
}

/// As [`solve_column`], falling back to continuation in the activity from
/// the passive problem when the direct solve fails.
pub fn solve_column_continued(
    eta: f64,
    eta_xxx: f64,
    bc: &AnchoringData,
    p: &MaterialParams,
    settings: &ColumnSettings,
    guess: Option<&ColumnProfile>,
) -> Result<ColumnProfile> {
    let first = match solve_column(eta, eta_xxx, bc, p, settings, guess) {
        Ok(c) => return Ok(c),
        Err(e @ (Error::NonConvergence { .. } | Error::Domain(_))) if p.activity != 0.0 => e,
        Err(e) => return Err(e),
    };
    log::debug!("direct column solve failed ({first}); continuing in activity");
    let target = p.activity;
    let mut current = solve_column(eta, eta_xxx, bc, &p.with_activity(0.0), settings, guess)?;
    let mut reached = 0.0;
    let mut step = target;
    let mut history = Vec::new();
    while reached != target {
        let next = if (target - reached).abs() <= step.abs() { target } else { reached + step };
        match solve_column(eta, eta_xxx, bc, &p.with_activity(next), settings, Some(&current)) {
            Ok(c) => {
                history.push(c.residual);
                current = c;
                reached = next;
                step *= 2.0;
            }
            Err(Error::NonConvergence { residual, .. }) => {
                history.push(residual);
                step *= 0.5;
                if step.abs() < settings.min_continuation_step * target.abs() {
                    return Err(Error::NonConvergence { iterations: history.len(), residual, history });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(current)
}
