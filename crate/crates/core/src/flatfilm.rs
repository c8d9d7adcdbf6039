//! Films of constant thickness: the passive linear solution, the passive
//! quadrature solution with its two compatibility conditions, and the active
//! column problem.
//!
//! In the passive case `q^2 theta' = c1` is constant across the film and the
//! order-parameter equation has the first integral
//!
//! ```text
//! q'^2 / 2 + 2 c1^2 / q^2 + (a^2 q^2 / 2 - c^2 q^4 / 8) / L1 = c2,
//! ```
//!
//! so `x3(q)` and `theta(q)` follow by quadrature of `1 / sqrt(R(q))` with
//! [`radicand`] `R`.

use serde::{Deserialize, Serialize};

pub use crate::column::ColumnProfile;
use crate::column::{self, ColumnMode, ColumnSettings, ShearClosure, DEFAULT_NODES};
use crate::error::{Error, Result};
use crate::material::{leslie_coefficients, AnchoringData, MaterialParams};
use crate::numerics::bvp::uniform_mesh;
use crate::numerics::quadrature::{integrate_sqrt_endpoints, QuadOptions};
use crate::numerics::roots::{brent, brent_with_values, BrentOptions};

/// Tolerance required of the compatibility residuals.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

const QUAD: QuadOptions = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_subdivisions: 2000 };

/// Integration constants of the passive quadrature solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityRoots {
    pub c1: f64,
    pub c2: f64,
    pub residual_norm: f64,
    /// Every root found by the search, including the returned one.
    pub all_roots: Vec<(f64, f64)>,
}

/// `q'^2` as a function of `q = s` on the passive solution.
pub fn radicand(s: f64, c1: f64, c2: f64, p: &MaterialParams) -> f64 {
    2.0 * c2 - potential(s, c1, p)
}

fn potential(s: f64, c1: f64, p: &MaterialParams) -> f64 {
    let s2 = s * s;
    4.0 * c1 * c1 / s2 + (p.a2 * s2 - 0.25 * p.c2 * s2 * s2) / p.l1
}

/// Value of `c2` for a profile that leaves the substrate with slope `dq0`.
pub fn first_integral_constant(c1: f64, q1: f64, dq0: f64, p: &MaterialParams) -> f64 {
    0.5 * dq0 * dq0 + 0.5 * potential(q1, c1, p)
}

fn require_passive(p: &MaterialParams) -> Result<()> {
    if p.passive() {
        Ok(())
    } else {
        Err(Error::InvalidRegime("active parameters are nonzero; no closed-form flat solution exists".into()))
    }
}

fn check_film(eta: f64, bc: &AnchoringData, p: &MaterialParams) -> Result<()> {
    p.validate()?;
    bc.validate()?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("film thickness must be positive, got {eta}")));
    }
    Ok(())
}

/// Linear director profile at constant order parameter, as in
/// [`trivial_flat_solution_on`] with the default number of nodes.
pub fn trivial_flat_solution(bc: &AnchoringData, eta: f64, p: &MaterialParams) -> Result<ColumnProfile> {
    trivial_flat_solution_on(bc, eta, p, DEFAULT_NODES)
}

/// `theta` linear in `x3`, `q = q0` with `q0^2 = 2a^2/c^2 - 8 (L1/c^2) slope^2`.
pub fn trivial_flat_solution_on(
    bc: &AnchoringData,
    eta: f64,
    p: &MaterialParams,
    nodes: usize,
) -> Result<ColumnProfile> {
    check_film(eta, bc, p)?;
    require_passive(p)?;
    if bc.q1 != bc.q2 {
        return Err(Error::InvalidParameter(format!("linear solution needs q1 = q2, got {} and {}", bc.q1, bc.q2)));
    }
    let slope = (bc.theta2 - bc.theta1) / eta;
    let r = 2.0 * p.a2 / p.c2 - 8.0 * p.l1 / p.c2 * slope * slope;
    if r < 0.0 {
        return Err(Error::NoSolution(format!("order parameter radicand is negative ({r:e})")));
    }
    let q0 = r.sqrt();
    if (q0 - bc.q1).abs() > 1e-8 * (1.0 + q0) {
        log::warn!("linear solution has q = {q0}, anchoring asks for q = {}", bc.q1);
    }
    let x3 = uniform_mesh(0.0, eta, nodes);
    let theta = x3.iter().map(|x| bc.theta1 + slope * x).collect();
    let n = x3.len();
    Ok(ColumnProfile::at_rest(x3, theta, vec![q0; n], vec![slope; n], vec![0.0; n]))
}

fn inverse_sqrt_radicand(s: f64, c1: f64, c2: f64, p: &MaterialParams, weight: f64) -> Result<f64> {
    let r = radicand(s, c1, c2, p);
    if r > 0.0 {
        Ok(weight / r.sqrt())
    } else {
        Err(Error::TurningPoint { s, radicand: r })
    }
}

fn thickness_integral(c1: f64, c2: f64, from: f64, to: f64, p: &MaterialParams) -> Result<f64> {
    let (lo, hi) = (from.min(to), from.max(to));
    Ok(integrate_sqrt_endpoints(|s| inverse_sqrt_radicand(s, c1, c2, p, 1.0), lo, hi, &QUAD)?.value)
}

fn angle_integral(c1: f64, c2: f64, from: f64, to: f64, p: &MaterialParams) -> Result<f64> {
    let (lo, hi) = (from.min(to), from.max(to));
    Ok(integrate_sqrt_endpoints(|s| inverse_sqrt_radicand(s, c1, c2, p, 1.0 / (s * s)), lo, hi, &QUAD)?.value)
}

/// Height `x3` at which the passive profile from `q1` reaches `q_target`.
///
/// The profile is taken monotone between `q1` and `q_target` in either
/// direction.
pub fn q_quadrature(c1: f64, c2: f64, q_target: f64, bc: &AnchoringData, p: &MaterialParams) -> Result<f64> {
    if q_target == bc.q1 {
        return Ok(0.0);
    }
    check_positive_range(bc.q1, q_target)?;
    thickness_integral(c1, c2, bc.q1, q_target, p)
}

/// `theta(q_target) - theta1` on the same profile.
pub fn theta_quadrature(c1: f64, c2: f64, q_target: f64, bc: &AnchoringData, p: &MaterialParams) -> Result<f64> {
    if q_target == bc.q1 || c1 == 0.0 {
        return Ok(0.0);
    }
    check_positive_range(bc.q1, q_target)?;
    Ok(c1 * angle_integral(c1, c2, bc.q1, q_target, p)?)
}

fn check_positive_range(a: f64, b: f64) -> Result<()> {
    if a.min(b) <= 0.0 {
        return Err(Error::Domain(format!("order parameter range [{a}, {b}] must stay positive")));
    }
    Ok(())
}

/// Maximum of the potential over `[lo, hi]`.
fn potential_max(c1: f64, lo: f64, hi: f64, p: &MaterialParams) -> f64 {
    const SAMPLES: usize = 400;
    let h = (hi - lo) / SAMPLES as f64;
    let (k, _) = (0..=SAMPLES)
        .map(|k| (k, potential(lo + h * k as f64, c1, p)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let mut a = (lo + h * (k as f64 - 1.0)).max(lo);
    let mut b = (lo + h * (k as f64 + 1.0)).min(hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = b - g * (b - a);
        let m2 = a + g * (b - a);
        if potential(m1, c1, p) > potential(m2, c1, p) {
            b = m2;
        } else {
            a = m1;
        }
    }
    [potential(lo, c1, p), potential(hi, c1, p), potential(0.5 * (a + b), c1, p)]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves the thickness condition for `c2` at fixed `c1`. `None` when even the
/// smallest admissible `c2` yields a film thinner than `eta` (the profile
/// would need a turning point).
pub(crate) fn c2_for(c1: f64, lo: f64, hi: f64, eta: f64, p: &MaterialParams) -> Result<Option<f64>> {
    let base = 0.5 * potential_max(c1, lo, hi, p);
    let scale = 1.0 + base.abs();
    let mut delta = 1e-13 * scale;
    let mut left = None;
    for _ in 0..14 {
        if let Ok(v) = thickness_integral(c1, base + delta, lo, hi, p) {
            left = Some((base + delta, v));
            break;
        }
        delta *= 10.0;
    }
    let Some((c_left, i_left)) = left else {
        return Err(Error::NoSolution(format!("thickness integral undefined near c2 = {base} (c1 = {c1})")));
    };
    if i_left < eta {
        return Ok(None);
    }
    let mut width = scale;
    let mut right = None;
    for _ in 0..200 {
        let v = thickness_integral(c1, base + width, lo, hi, p)?;
        if v < eta {
            right = Some((base + width, v));
            break;
        }
        width *= 2.0;
    }
    let Some((c_right, i_right)) = right else {
        return Err(Error::NoSolution("thickness integral does not decay in c2".into()));
    };
    let opts = BrentOptions { x_tol: 1e-15 * scale, ..Default::default() };
    let mut f = |c: f64| Ok(thickness_integral(c1, c, lo, hi, p)? - eta);
    brent_with_values(&mut f, c_left, c_right, i_left - eta, i_right - eta, &opts).map(Some)
}

struct Mismatch<'a> {
    lo: f64,
    hi: f64,
    eta: f64,
    dtheta: f64,
    p: &'a MaterialParams,
}

impl Mismatch<'_> {
    /// `(c2, c1 * J - dtheta)` or `None` outside the admissible set.
    fn eval(&self, c1: f64) -> Result<Option<(f64, f64)>> {
        let Some(c2) = c2_for(c1, self.lo, self.hi, self.eta, self.p)? else {
            return Ok(None);
        };
        let j = angle_integral(c1, c2, self.lo, self.hi, self.p)?;
        Ok(Some((c2, c1 * j - self.dtheta)))
    }
}

/// Finds `(c1, c2)` such that the passive quadrature profile has thickness
/// `eta` and director mismatch `theta2 - theta1`.
///
/// For fixed `c1` the thickness integral decreases monotonically in `c2`, so
/// `c2(c1)` is bracketed and found with Brent's method; the director
/// condition is then scanned over a logarithmic range of `c1` and each sign
/// change refined. The root closest to the seed (linear-solution slope for
/// `c1`, a coarse substrate slope for `c2`) is returned.
pub fn solve_compatibility(bc: &AnchoringData, eta: f64, p: &MaterialParams) -> Result<CompatibilityRoots> {
    check_film(eta, bc, p)?;
    require_passive(p)?;
    let dtheta = bc.theta2 - bc.theta1;
    if dtheta == 0.0 {
        return Err(Error::NoSolution(
            "equal anchoring angles: the director condition cannot vanish for c1 != 0".into(),
        ));
    }
    if bc.q1 == bc.q2 {
        return Err(Error::NoSolution("equal order parameters admit no monotone profile".into()));
    }
    check_positive_range(bc.q1, bc.q2)?;
    let (lo, hi) = (bc.q1.min(bc.q2), bc.q1.max(bc.q2));
    let m = Mismatch { lo, hi, eta, dtheta, p };

    let slope = dtheta / eta;
    let trivial = 2.0 * p.a2 / p.c2 - 8.0 * p.l1 / p.c2 * slope * slope;
    let q_seed = if trivial > 0.0 { trivial.sqrt() } else { 0.5 * (bc.q1 + bc.q2) };
    let c1_seed = q_seed * q_seed * slope;
    let c2_seed = first_integral_constant(c1_seed, bc.q1, (bc.q2 - bc.q1) / eta, p);

    const GRID: usize = 81;
    let mut samples = Vec::with_capacity(GRID);
    for k in 0..GRID {
        let c1 = c1_seed * 10f64.powf(-4.0 + 6.0 * k as f64 / (GRID - 1) as f64);
        match m.eval(c1) {
            Ok(Some((_, g))) => samples.push((c1, g)),
            Ok(None) => samples.push((c1, f64::NAN)),
            Err(e) => {
                log::debug!("compatibility scan skipped c1 = {c1}: {e}");
                samples.push((c1, f64::NAN));
            }
        }
    }

    let mut roots = Vec::new();
    for w in samples.windows(2) {
        let ((a, ga), (b, gb)) = (w[0], w[1]);
        if !(ga.is_finite() && gb.is_finite()) || ga.signum() == gb.signum() {
            continue;
        }
        let mut g = |c1: f64| match m.eval(c1)? {
            Some((_, v)) => Ok(v),
            None => Err(Error::NoSolution(format!("c1 = {c1} left the admissible set"))),
        };
        let opts = BrentOptions { x_tol: 1e-15 * a.abs().max(b.abs()), ..Default::default() };
        match brent_with_values(&mut g, a, b, ga, gb, &opts) {
            Ok(c1) => {
                if let Ok(Some((c2, _))) = m.eval(c1) {
                    let res = compatibility_residual(c1, c2, bc, eta, p)?;
                    if res <= COMPATIBILITY_TOL {
                        roots.push((c1, c2, res));
                    } else {
                        log::debug!("discarded root c1 = {c1}, c2 = {c2} with residual {res:e}");
                    }
                }
            }
            Err(e) => log::debug!("compatibility refinement failed on [{a}, {b}]: {e}"),
        }
    }

    let all_roots: Vec<(f64, f64)> = roots.iter().map(|r| (r.0, r.1)).collect();
    let best = roots
        .iter()
        .min_by(|x, y| {
            let dx = (x.0 - c1_seed).hypot(x.1 - c2_seed);
            let dy = (y.0 - c1_seed).hypot(y.1 - c2_seed);
            dx.total_cmp(&dy)
        })
        .ok_or_else(|| {
            Error::NoSolution(format!(
                "no (c1, c2) satisfies the compatibility conditions for eta = {eta}, mismatch = {dtheta}"
            ))
        })?;
    if roots.len() > 1 {
        log::info!("{} compatibility roots found: {:?}", roots.len(), all_roots);
    }
    Ok(CompatibilityRoots { c1: best.0, c2: best.1, residual_norm: best.2, all_roots })
}

/// Max of the two compatibility residuals at `(c1, c2)`.
pub fn compatibility_residual(c1: f64, c2: f64, bc: &AnchoringData, eta: f64, p: &MaterialParams) -> Result<f64> {
    let thick = q_quadrature(c1, c2, bc.q2, bc, p)?;
    let turn = theta_quadrature(c1, c2, bc.q2, bc, p)?;
    Ok((thick - eta).abs().max((turn - (bc.theta2 - bc.theta1)).abs()))
}

/// Samples the passive quadrature profile on a uniform grid of `nodes` points
/// by inverting `x3(q)`.
pub fn compatibility_profile(
    roots: &CompatibilityRoots,
    bc: &AnchoringData,
    eta: f64,
    p: &MaterialParams,
    nodes: usize,
) -> Result<ColumnProfile> {
    let (c1, c2) = (roots.c1, roots.c2);
    let x3 = uniform_mesh(0.0, eta, nodes);
    let dir = (bc.q2 - bc.q1).signum();
    let opts = BrentOptions { x_tol: 1e-15, ..Default::default() };
    let n = x3.len();
    let mut q = vec![bc.q1; n];
    q[n - 1] = bc.q2;
    for i in 1..n - 1 {
        q[i] = brent(|s| Ok(q_quadrature(c1, c2, s, bc, p)? - x3[i]), bc.q1, bc.q2, &opts)?;
    }
    let mut theta = Vec::with_capacity(n);
    for &qi in &q {
        theta.push(bc.theta1 + theta_quadrature(c1, c2, qi, bc, p)?);
    }
    let theta_x3 = q.iter().map(|s| c1 / (s * s)).collect();
    let q_x3 = q.iter().map(|&s| dir * radicand(s, c1, c2, p).max(0.0).sqrt()).collect();
    Ok(ColumnProfile::at_rest(x3, theta, q, theta_x3, q_x3))
}

/// Active flat film: the column problem with a flat free surface, continued
/// in the activity from the passive problem when needed.
pub fn active_flatfilm_bvp(
    bc: &AnchoringData,
    eta: f64,
    p: &MaterialParams,
    settings: &ColumnSettings,
) -> Result<ColumnProfile> {
    check_film(eta, bc, p)?;
    if settings.mode != ColumnMode::Full && settings.mode != ColumnMode::ThreeField {
        return Err(Error::InvalidParameter("flat-film problem solves for both theta and q".into()));
    }
    ShearClosure::new(eta, 0.0, bc, p)?;
    let passive = p.with_activity(0.0);
    let guess = if bc.q1 == bc.q2 {
        trivial_flat_solution_on(bc, eta, &passive, settings.nodes).ok()
    } else {
        solve_compatibility(bc, eta, &passive)
            .and_then(|r| compatibility_profile(&r, bc, eta, &passive, settings.nodes))
            .ok()
    };
    column::solve_column_continued(eta, 0.0, bc, p, settings, guess.as_ref())
}

/// Max-norm of the finite-difference residual of the flat-film equations
/// (director and order parameter) at the interior nodes of `profile`, using
/// its stored derivative fields and the shear rate implied by `p`.
pub fn flat_residual(profile: &ColumnProfile, bc: &AnchoringData, p: &MaterialParams) -> Result<f64> {
    let closure = ShearClosure::new(profile.eta, 0.0, bc, p)?;
    let n = profile.nodes();
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let h2 = profile.x3[i + 1] - profile.x3[i - 1];
        let (q, th) = (profile.q[i], profile.theta[i]);
        let coeffs = leslie_coefficients(q, p);
        let v13 = closure.shear_rate(profile.x3[i], q, th, &coeffs)?;
        let flux = |k: usize| profile.q[k] * profile.q[k] * profile.theta_x3[k];
        let r_theta = (flux(i + 1) - flux(i - 1)) / h2 + coeffs.torque(th) * v13 / (4.0 * p.l1);
        let dth = profile.theta_x3[i];
        let r_q = (profile.q_x3[i + 1] - profile.q_x3[i - 1]) / h2
            - (4.0 * q * dth * dth
                - p.xi * (q + 2.0) / (3.0 * p.l1 * p.gamma_rot) * (2.0 * th).sin() * v13
                - q / p.l1 * (p.a2 - 0.5 * p.c2 * q * q)
                - p.activity * p.lambda1 / p.l1 * q);
        worst = worst.max(r_theta.abs()).max(r_q.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> MaterialParams {
        MaterialParams::default()
    }

    fn film() -> MaterialParams {
        MaterialParams { a2: 4.0, c2: 4.0, l1: 0.1, ..Default::default() }
    }

    #[test]
    fn trivial_zero_slope() {
        let bc = AnchoringData::new(0.3, 0.3, 2f64.sqrt(), 2f64.sqrt());
        let prof = trivial_flat_solution(&bc, 1.0, &unit()).unwrap();
        assert_relative_eq!(prof.q[17], 2f64.sqrt(), epsilon = 1e-15);
        assert!(prof.theta.iter().all(|&t| t == 0.3));
    }

    #[test]
    fn trivial_unit_order() {
        let p = MaterialParams { l1: 1.0 / 32.0, ..unit() };
        let bc = AnchoringData::new(0.0, 2.0, 1.0, 1.0);
        let prof = trivial_flat_solution(&bc, 1.0, &p).unwrap();
        assert_relative_eq!(prof.q[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(prof.theta[200], 2.0, epsilon = 1e-15);
        assert!(flat_residual(&prof, &bc, &p).unwrap() <= 1e-12);
    }

    #[test]
    fn trivial_negative_radicand() {
        let bc = AnchoringData::new(0.0, 1.0, 1.0, 1.0);
        assert!(matches!(trivial_flat_solution(&bc, 1.0, &unit()), Err(Error::NoSolution(_))));
    }

    #[test]
    fn trivial_rejects_activity() {
        let p = MaterialParams { activity: 0.1, zeta: 1.0, ..unit() };
        let bc = AnchoringData::new(0.0, 0.1, 1.0, 1.0);
        assert!(matches!(trivial_flat_solution(&bc, 1.0, &p), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn empty_quadrature() {
        let bc = AnchoringData::new(0.0, 0.3, 0.5, 0.9);
        assert_eq!(q_quadrature(0.1, 20.0, 0.5, &bc, &film()).unwrap(), 0.0);
        assert_eq!(theta_quadrature(0.0, 20.0, 0.8, &bc, &film()).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_is_monotone_and_signed() {
        let bc = AnchoringData::new(0.0, 0.3, 0.5, 0.9);
        let p = film();
        let a = q_quadrature(0.5, 20.0, 0.6, &bc, &p).unwrap();
        let b = q_quadrature(0.5, 20.0, 0.7, &bc, &p).unwrap();
        assert!(b > a && a > 0.0);
        assert!(theta_quadrature(-0.5, 20.0, 0.7, &bc, &p).unwrap() < 0.0);
    }

    #[test]
    fn turning_point_is_reported() {
        let bc = AnchoringData::new(0.0, 0.3, 0.5, 0.9);
        let p = film();
        // R(0.5) > 0 but R becomes negative before 0.9 for this small c2.
        let c2 = 0.5 * potential(0.5, 0.3, &p) + 0.01;
        let r = q_quadrature(0.3, c2, 0.9, &bc, &p);
        assert!(matches!(r, Err(Error::TurningPoint { .. })), "{r:?}");
    }

    #[test]
    fn equal_angles_have_no_compatible_profile() {
        let bc = AnchoringData::new(0.4, 0.4, 1.2, 1.3);
        assert!(matches!(solve_compatibility(&bc, 1.0, &unit()), Err(Error::NoSolution(_))));
    }

    #[test]
    fn compatibility_roots_close_both_conditions() {
        let bc = AnchoringData::new(0.0, 0.3, 0.5, 0.9);
        let p = film();
        let roots = solve_compatibility(&bc, 0.2, &p).unwrap();
        assert!(roots.residual_norm <= COMPATIBILITY_TOL);
        assert!(compatibility_residual(roots.c1, roots.c2, &bc, 0.2, &p).unwrap() <= COMPATIBILITY_TOL);
        let prof = compatibility_profile(&roots, &bc, 0.2, &p, 41).unwrap();
        assert_relative_eq!(prof.theta[40], 0.3, epsilon = 1e-8);
        assert!(prof.q.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn decreasing_order_parameter() {
        let bc = AnchoringData::new(0.0, 0.3, 0.9, 0.5);
        let p = film();
        let roots = solve_compatibility(&bc, 0.2, &p).unwrap();
        let prof = compatibility_profile(&roots, &bc, 0.2, &p, 21).unwrap();
        assert!(prof.q.windows(2).all(|w| w[1] < w[0]));
        assert!(prof.q_x3[10] < 0.0);
    }

    #[test]
    fn passive_bvp_reproduces_quadrature_profile() {
        let bc = AnchoringData::new(0.0, 0.3, 0.5, 0.9);
        let p = film();
        let roots = solve_compatibility(&bc, 0.2, &p).unwrap();
        let quad = compatibility_profile(&roots, &bc, 0.2, &p, 201).unwrap();
        let bvp = active_flatfilm_bvp(&bc, 0.2, &p, &ColumnSettings::default()).unwrap();
        for i in 0..201 {
            assert!((quad.q[i] - bvp.q[i]).abs() < 1e-9, "node {i}");
            assert!((quad.theta[i] - bvp.theta[i]).abs() < 1e-9, "node {i}");
        }
        assert!(bvp.max_abs_v1() == 0.0);
    }
}
