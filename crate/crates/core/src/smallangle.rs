//! Films with a uniform director angle: the passive order-parameter profile,
//! the active constant-angle states and the thin-film equation they induce,
//!
//! ```text
//! eta_t = -(2 / (3 f_A)) d1[eta^3 eta_111] + C d1(eta^2).
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::column::{ColumnProfile, DEFAULT_NODES};
use crate::error::{Error, Result};
pub use crate::film::FilmState;
use crate::film::{self, d1, third_derivative, EvolveOptions, FluxModel, ThirdDerivative, Trajectory};
use crate::flatfilm::{c2_for, compatibility_profile, CompatibilityRoots};
use crate::material::{leslie_coefficients, AnchoringData, MaterialParams};

/// Largest anchoring mismatch accepted as "equal angles".
pub const ANGLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `theta = acos(c) / 2` in `[0, pi/2]`.
    Plus,
    /// `theta = pi - acos(c) / 2` in `[pi/2, pi)`.
    Minus,
}

/// Uniform state in which the director torque vanishes and `q` sits at the
/// active reaction equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstThetaSolution {
    pub q1: f64,
    pub theta1: f64,
    pub branch: Branch,
}

impl ConstThetaSolution {
    /// Residual of `gamma1 - gamma2 cos(2 theta) = 0`.
    pub fn torque_residual(&self, p: &MaterialParams) -> f64 {
        leslie_coefficients(self.q1, p).torque(self.theta1).abs()
    }

    /// Residual of `a^2 - c^2 q^2 / 2 + activity * lambda1 = 0`.
    pub fn equilibrium_residual(&self, p: &MaterialParams) -> f64 {
        (p.a2 - 0.5 * p.c2 * self.q1 * self.q1 + p.activity * p.lambda1).abs()
    }

    pub fn anchoring(&self) -> AnchoringData {
        AnchoringData::new(self.theta1, self.theta1, self.q1, self.q1)
    }
}

/// Passive profile with `theta = theta1` and `q` from the quadrature solution
/// at `c1 = 0`.
pub fn passive_small_angle_profile(bc: &AnchoringData, eta: f64, p: &MaterialParams) -> Result<ColumnProfile> {
    passive_small_angle_profile_on(bc, eta, p, DEFAULT_NODES)
}

pub fn passive_small_angle_profile_on(
    bc: &AnchoringData,
    eta: f64,
    p: &MaterialParams,
    nodes: usize,
) -> Result<ColumnProfile> {
    p.validate()?;
    bc.validate()?;
    if !p.passive() {
        return Err(Error::InvalidRegime("uniform director needs passive parameters".into()));
    }
    if (bc.theta2 - bc.theta1).abs() > ANGLE_TOL {
        return Err(Error::InvalidParameter(format!(
            "anchoring angles differ by {}; the uniform-director profile needs equal angles",
            bc.theta2 - bc.theta1
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("film thickness must be positive, got {eta}")));
    }
    let bc = AnchoringData { theta2: bc.theta1, ..*bc };
    if bc.q1 == bc.q2 {
        let q = bc.q1;
        let equilibrium = p.reaction_equilibrium();
        if q == 0.0 || (q.abs() - equilibrium).abs() <= 1e-12 * equilibrium {
            let x3 = crate::numerics::bvp::uniform_mesh(0.0, eta, nodes);
            let n = x3.len();
            return Ok(ColumnProfile::at_rest(x3, vec![bc.theta1; n], vec![q; n], vec![0.0; n], vec![0.0; n]));
        }
        return Err(Error::NoSolution(format!("q1 = q2 = {q} is not an equilibrium of the order-parameter equation")));
    }
    let c2 = passive_small_angle_constant(&bc, eta, p)?;
    let roots = CompatibilityRoots { c1: 0.0, c2, residual_norm: 0.0, all_roots: vec![(0.0, c2)] };
    compatibility_profile(&roots, &bc, eta, p, nodes)
}

/// Integration constant `c2` that makes the `c1 = 0` profile span thickness `eta`.
pub fn passive_small_angle_constant(bc: &AnchoringData, eta: f64, p: &MaterialParams) -> Result<f64> {
    let (lo, hi) = (bc.q1.min(bc.q2), bc.q1.max(bc.q2));
    if lo <= 0.0 {
        return Err(Error::Domain(format!("order parameter range [{lo}, {hi}] must stay positive")));
    }
    c2_for(0.0, lo, hi, eta, p)?.ok_or_else(|| {
        Error::NoSolution(format!(
            "no monotone order-parameter profile from {} to {} spans thickness {eta}",
            bc.q1, bc.q2
        ))
    })
}

/// Both constant-angle states for the active film.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstThetaPair {
    pub plus: ConstThetaSolution,
    pub minus: ConstThetaSolution,
    pub cos_two_theta: f64,
}

/// Solves `gamma1(q) = gamma2(q) cos(2 theta)` together with the active
/// reaction equilibrium `q^2 = 2a^2/c^2 + 2 activity lambda1 / c^2`.
pub fn active_const_theta(p: &MaterialParams) -> Result<ConstThetaPair> {
    p.validate()?;
    if p.xi == 0.0 {
        return Err(Error::NoSolution("no constant-angle state for xi = 0".into()));
    }
    let q_sq = 2.0 * p.a2 / p.c2 + 2.0 * p.activity * p.lambda1 / p.c2;
    if q_sq < 0.0 {
        return Err(Error::NoSolution(format!("equilibrium order parameter squared is negative ({q_sq})")));
    }
    let q = q_sq.sqrt();
    let c = -3.0 * q / ((2.0 + q) * p.xi);
    if !(c.abs() <= 1.0) {
        return Err(Error::NoSolution(format!("cos(2 theta) = {c} is outside [-1, 1]")));
    }
    let half = 0.5 * c.acos();
    let plus = ConstThetaSolution { q1: q, theta1: half, branch: Branch::Plus };
    let minus = ConstThetaSolution { q1: q, theta1: PI - half, branch: Branch::Minus };
    Ok(ConstThetaPair { plus, minus, cos_two_theta: c })
}

/// Effective viscosity and advection constant `(f_A, C)` of the induced
/// thin-film equation at a uniform state.
pub fn thinfilm_coefficients(sol: &ConstThetaSolution, p: &MaterialParams) -> Result<(f64, f64)> {
    let coeffs = leslie_coefficients(sol.q1, p);
    let fa = coeffs.f_a(sol.theta1);
    if fa.abs() < 1e-10 {
        return Err(Error::ViscositySingularity { x3: f64::NAN, q: sol.q1, theta: sol.theta1, value: fa });
    }
    let stress = p.active_stress_factor(sol.q1) * (2.0 * sol.theta1).sin();
    if p.activity == 0.0 || stress == 0.0 {
        return Ok((fa, 0.0));
    }
    let fb = coeffs.f_b(sol.theta1);
    if fb.abs() < 1e-10 {
        return Err(Error::BoundaryClosureSingularity(fb));
    }
    // Uniform shear offset of the velocity profile; the flux picks up a0 eta^2 / 2.
    let a0 = -p.activity * stress * (1.0 + coeffs.torque(sol.theta1) / fb) / fa;
    Ok((fa, -0.5 * a0))
}

/// Spatial operator of the induced thin-film equation in conservative form.
pub fn modified_thinfilm_rhs(state: &FilmState, sol: &ConstThetaSolution, p: &MaterialParams) -> Result<Vec<f64>> {
    modified_thinfilm_rhs_with(state, sol, p, ThirdDerivative::ComposedCentered)
}

pub fn modified_thinfilm_rhs_with(
    state: &FilmState,
    sol: &ConstThetaSolution,
    p: &MaterialParams,
    third: ThirdDerivative,
) -> Result<Vec<f64>> {
    state.validate()?;
    let (fa, c) = thinfilm_coefficients(sol, p)?;
    let h = state.spacing();
    let xxx = third_derivative(&state.eta, h, third);
    let flux: Vec<f64> =
        state.eta.iter().zip(&xxx).map(|(e, t)| 2.0 / (3.0 * fa) * e.powi(3) * t - c * e * e).collect();
    Ok(d1(&flux, h).into_iter().map(|v| -v).collect())
}

struct UniformFlux {
    mobility: f64,
    advection: f64,
}

impl FluxModel for UniformFlux {
    fn split(&mut self, eta: &[f64], _: &[f64], _: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            eta.iter().map(|e| self.mobility * e.powi(3)).collect(),
            eta.iter().map(|e| -self.advection * e * e).collect(),
        ))
    }
}

/// Evolves the induced thin-film equation with the semi-implicit stepper.
pub fn evolve_modified_thinfilm(
    state0: &FilmState,
    sol: &ConstThetaSolution,
    p: &MaterialParams,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let (fa, c) = thinfilm_coefficients(sol, p)?;
    let mut model = UniformFlux { mobility: 2.0 / (3.0 * fa), advection: c };
    film::evolve(state0, &mut model, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::film::DtPolicy;
    use approx::assert_relative_eq;

    fn unit(xi: f64) -> MaterialParams {
        MaterialParams { xi, ..Default::default() }
    }

    #[test]
    fn no_state_without_flow_alignment() {
        assert!(matches!(active_const_theta(&unit(0.0)), Err(Error::NoSolution(_))));
    }

    #[test]
    fn cosine_out_of_range() {
        assert!(matches!(active_const_theta(&unit(1.0)), Err(Error::NoSolution(_))));
    }

    #[test]
    fn flow_tumbling_branch_values() {
        let pair = active_const_theta(&unit(-3.0)).unwrap();
        assert_relative_eq!(pair.plus.q1, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(pair.cos_two_theta, 2f64.sqrt() / (2.0 + 2f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(pair.plus.theta1 + pair.minus.theta1, PI, epsilon = 1e-15);
        for s in [pair.plus, pair.minus] {
            assert!(s.torque_residual(&unit(-3.0)) <= 1e-12);
            assert!(s.equilibrium_residual(&unit(-3.0)) <= 1e-12);
        }
    }

    #[test]
    fn negative_equilibrium_has_no_state() {
        let p = MaterialParams { xi: -3.0, activity: -2.0, lambda1: 1.0, ..Default::default() };
        assert!(matches!(active_const_theta(&p), Err(Error::NoSolution(_))));
    }

    #[test]
    fn passive_advection_vanishes() {
        let p = unit(-3.0);
        let sol = active_const_theta(&p).unwrap().plus;
        assert_eq!(thinfilm_coefficients(&sol, &p).unwrap().1, 0.0);
    }

    #[test]
    fn flat_state_has_zero_rhs() {
        let p = MaterialParams { xi: -3.0, activity: 0.1, lambda1: 0.5, zeta: 1.0, ..Default::default() };
        let sol = active_const_theta(&p).unwrap().plus;
        let s = FilmState::periodic(32, 1.0, |_| 1.3).unwrap();
        assert!(modified_thinfilm_rhs(&s, &sol, &p).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn degenerate_equal_order_profile() {
        let p = MaterialParams::default();
        let q = p.reaction_equilibrium();
        let prof = passive_small_angle_profile(&AnchoringData::new(0.2, 0.2, q, q), 1.0, &p).unwrap();
        assert!(prof.q.iter().all(|&v| v == q));
        let r = passive_small_angle_profile(&AnchoringData::new(0.2, 0.2, 0.5, 0.5), 1.0, &p);
        assert!(matches!(r, Err(Error::NoSolution(_))));
    }

    #[test]
    fn passive_profile_reaches_surface_value() {
        let p = MaterialParams { a2: 4.0, c2: 4.0, l1: 0.1, ..Default::default() };
        let bc = AnchoringData::new(0.3, 0.3, 0.5, 0.9);
        let prof = passive_small_angle_profile(&bc, 0.1, &p).unwrap();
        assert_eq!(prof.q[prof.nodes() - 1], 0.9);
        assert!(prof.theta.iter().all(|&t| t == 0.3));
        assert!(prof.q.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn passive_amplitude_decays() {
        let p = unit(-3.0);
        let sol = active_const_theta(&p).unwrap().plus;
        let s = FilmState::periodic(64, 1.0, |x| 1.0 + 0.1 * (2.0 * PI * x).cos()).unwrap();
        let opts = EvolveOptions { t_end: 0.01, dt: DtPolicy::Fixed { dt: 5e-4 }, ..Default::default() };
        let t = evolve_modified_thinfilm(&s, &sol, &p, &opts).unwrap();
        let amp: Vec<f64> = t.samples.iter().map(|x| x.max_eta - x.min_eta).collect();
        assert!(amp.windows(2).all(|w| w[1] < w[0]));
    }
}
