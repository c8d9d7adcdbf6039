//! Constitutive data of the thin-film Q-tensor model.
//!
//! All quantities here are dimensionless. The activity enters the leading-order
//! equations only through the combination `activity = eps * dchi / Gamma`, so
//! [`MaterialParams`] stores that group directly next to `lambda1` and `zeta`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensionless material constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Flow-alignment parameter.
    pub xi: f64,
    /// Rotational mobility.
    pub gamma_rot: f64,
    /// Isotropic viscosity.
    pub mu: f64,
    /// One-constant elastic modulus.
    pub l1: f64,
    pub a2: f64,
    pub c2: f64,
    /// Grouped activity `eps * dchi / Gamma`.
    #[serde(default)]
    pub activity: f64,
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub zeta: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { xi: 1.0, gamma_rot: 1.0, mu: 1.0, l1: 1.0, a2: 1.0, c2: 1.0, activity: 0.0, lambda1: 0.0, zeta: 0.0 }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("xi", self.xi),
            ("gamma_rot", self.gamma_rot),
            ("mu", self.mu),
            ("l1", self.l1),
            ("a2", self.a2),
            ("c2", self.c2),
            ("activity", self.activity),
            ("lambda1", self.lambda1),
            ("zeta", self.zeta),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in
            [("gamma_rot", self.gamma_rot), ("mu", self.mu), ("l1", self.l1), ("a2", self.a2), ("c2", self.c2)]
        {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// True when neither active mechanism contributes.
    pub fn passive(&self) -> bool {
        self.activity * self.lambda1 == 0.0 && self.activity * self.zeta == 0.0
    }

    /// Copy with the activity group replaced.
    pub fn with_activity(&self, activity: f64) -> Self {
        Self { activity, ..*self }
    }

    /// Active stress amplitude `(xi*lambda1*(1 - q^2) - zeta) * q`.
    pub fn active_stress_factor(&self, q: f64) -> f64 {
        (self.xi * self.lambda1 * (1.0 - q * q) - self.zeta) * q
    }

    /// Equilibrium of the reaction term, `q^2 = 2 a^2 / c^2`.
    pub fn reaction_equilibrium(&self) -> f64 {
        (2.0 * self.a2 / self.c2).sqrt()
    }

    /// Stationary points `+-2a/c` of [`bulk_energy_density`].
    pub fn bulk_energy_minimizer(&self) -> f64 {
        2.0 * (self.a2 / self.c2).sqrt()
    }
}

/// Leslie viscosities at a given scalar order parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeslieCoefficients {
    pub alpha: [f64; 6],
    pub gamma1: f64,
    pub gamma2: f64,
}

impl LeslieCoefficients {
    /// Builds the set from raw viscosities; `gamma1`, `gamma2` follow from them.
    pub fn from_alphas(alpha: [f64; 6]) -> Self {
        Self { alpha, gamma1: alpha[2] - alpha[1], gamma2: alpha[1] + alpha[2] }
    }

    /// Bulk effective shear viscosity.
    pub fn f_a(&self, theta: f64) -> f64 {
        let [a1, a2, a3, a4, a5, a6] = self.alpha;
        let (s, c) = theta.sin_cos();
        let s2 = (2.0 * theta).sin();
        0.5 * a1 * s2 * s2 + (a5 - a2) * c * c + (a3 + a6) * s * s + a4
    }

    /// Effective viscosity of the free-surface tangential stress balance.
    pub fn f_b(&self, theta: f64) -> f64 {
        let [a1, a2, a3, a4, a5, a6] = self.alpha;
        let (s, c) = theta.sin_cos();
        let s2 = (2.0 * theta).sin();
        0.5 * a1 * s2 * s2 + (a6 - a3) * c * c + (a2 + a5) * s * s + a4
    }

    /// Director torque factor `gamma1 - gamma2 cos(2 theta)`.
    pub fn torque(&self, theta: f64) -> f64 {
        self.gamma1 - self.gamma2 * (2.0 * theta).cos()
    }
}

pub fn leslie_coefficients(q: f64, p: &MaterialParams) -> LeslieCoefficients {
    let xi = p.xi;
    let g = p.gamma_rot;
    let q2 = q * q;
    let a1 = -2.0 / 3.0 * q2 * (3.0 + 4.0 * q - 4.0 * q2) * xi * xi / g;
    let a2 = (-q * (2.0 + q) * xi / 3.0 - q2) / g;
    let a3 = (-q * (2.0 + q) * xi / 3.0 + q2) / g;
    let a4 = 4.0 / 9.0 * (1.0 - q) * (1.0 - q) * xi * xi / g + 2.0 * p.mu;
    let a5 = (q * (4.0 - q) * xi * xi / 3.0 + q * (2.0 + q) * xi / 3.0) / g;
    let a6 = (q * (4.0 - q) * xi * xi / 3.0 - q * (2.0 + q) * xi / 3.0) / g;
    LeslieCoefficients::from_alphas([a1, a2, a3, a4, a5, a6])
}

pub fn f_a(q: f64, theta: f64, p: &MaterialParams) -> f64 {
    leslie_coefficients(q, p).f_a(theta)
}

pub fn f_b(q: f64, theta: f64, p: &MaterialParams) -> f64 {
    leslie_coefficients(q, p).f_b(theta)
}

/// Reduced Landau-de Gennes bulk density. Diagnostics only: the solvers use
/// the reaction term of the order-parameter equation as written.
pub fn bulk_energy_density(q: f64, p: &MaterialParams) -> f64 {
    let q2 = q * q;
    -p.a2 * q2 / 8.0 + p.c2 * q2 * q2 / 64.0
}

/// Parameters of the director-only (Leslie-Ericksen-Parodi) thin-film model
/// that correspond to a Q-tensor film at constant order parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LepParams {
    pub lambda1: f64,
    pub zeta: f64,
    /// One-constant Frank modulus.
    pub k: f64,
    pub delta_chi: f64,
}

impl LepParams {
    /// Product `zeta * delta_chi` that multiplies the active stress.
    pub fn active_stress(&self) -> f64 {
        self.zeta * self.delta_chi
    }
}

pub fn lep_param_map(q: f64, p: &MaterialParams) -> LepParams {
    LepParams {
        lambda1: p.lambda1,
        zeta: (p.zeta - p.xi * p.lambda1 * (1.0 - q * q)) * q,
        k: 2.0 * p.l1 * q * q,
        delta_chi: p.activity,
    }
}

/// Director angles and order parameters imposed at the substrate (1) and
/// the free surface (2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchoringData {
    pub theta1: f64,
    pub theta2: f64,
    pub q1: f64,
    pub q2: f64,
}

impl AnchoringData {
    pub fn new(theta1: f64, theta2: f64, q1: f64, q2: f64) -> Self {
        Self { theta1, theta2, q1, q2 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta1", self.theta1), ("theta2", self.theta2), ("q1", self.q1), ("q2", self.q2)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Substrate angle reduced to `[0, pi)`.
    pub fn theta1_reduced(&self) -> f64 {
        reduce_angle(self.theta1)
    }

    /// Surface angle reduced to `[0, pi)`.
    pub fn theta2_reduced(&self) -> f64 {
        reduce_angle(self.theta2)
    }

    /// Angle mismatch between the reduced anchoring angles.
    pub fn angle_mismatch(&self) -> f64 {
        self.theta2_reduced() - self.theta1_reduced()
    }
}

/// Maps an angle onto `[0, pi)`; the director is defined up to sign.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Dimensional inputs in any consistent unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalInputs {
    /// Lateral length scale `L`.
    pub length: f64,
    /// Lateral velocity scale `U`.
    pub velocity: f64,
    /// Isotropic viscosity.
    pub mu: f64,
    /// Surface tension `g0`.
    pub surface_tension: f64,
    pub l1: f64,
    pub gamma_rot: f64,
    pub xi: f64,
    pub a2: f64,
    pub c2: f64,
    pub delta_chi: f64,
    pub lambda1: f64,
    pub zeta: f64,
}

/// Returns the aspect ratio `eps = (mu U / g0)^(1/3)` and the dimensionless
/// material parameters.
///
/// Viscosities are measured in units of `mu`, so the returned `mu` is 1 and
/// `gamma_rot = mu * Gamma`. The elastic energy scale is `E = L1 / (eps L)^2`.
/// The chemical potential difference is measured in units of `U / L`, which
/// keeps `lambda1` unchanged and turns `zeta` into `Gamma * zeta`.
pub fn nondimensionalize(d: &DimensionalInputs) -> Result<(f64, MaterialParams)> {
    for (name, v) in [
        ("length", d.length),
        ("velocity", d.velocity),
        ("mu", d.mu),
        ("surface_tension", d.surface_tension),
        ("l1", d.l1),
        ("gamma_rot", d.gamma_rot),
        ("a2", d.a2),
        ("c2", d.c2),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let eps = (d.mu * d.velocity / d.surface_tension).cbrt();
    let energy_scale = d.l1 / (eps * eps * d.length * d.length);
    let gamma_bar = d.mu * d.gamma_rot;
    let dchi_bar = d.length / d.velocity * d.delta_chi;
    let p = MaterialParams {
        xi: d.xi,
        gamma_rot: gamma_bar,
        mu: 1.0,
        l1: d.l1 / (eps * d.mu * d.velocity * d.length),
        a2: d.a2 / energy_scale,
        c2: d.c2 / energy_scale,
        activity: eps * dchi_bar / gamma_bar,
        lambda1: d.lambda1,
        zeta: d.gamma_rot * d.zeta,
    };
    Ok((eps, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> MaterialParams {
        MaterialParams::default()
    }

    #[test]
    fn alpha4_at_full_order() {
        let l = leslie_coefficients(1.0, &unit());
        assert_relative_eq!(l.alpha[3], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn isotropic_state_keeps_only_alpha4() {
        let p = MaterialParams { xi: 0.7, gamma_rot: 1.3, mu: 0.4, ..unit() };
        let l = leslie_coefficients(0.0, &p);
        for k in [0, 1, 2, 4, 5] {
            assert_eq!(l.alpha[k], 0.0);
        }
        assert_relative_eq!(l.alpha[3], 4.0 * 0.49 / (9.0 * 1.3) + 0.8, epsilon = 1e-15);
        assert_relative_eq!(f_a(0.0, 0.37, &p), l.alpha[3], epsilon = 1e-15);
        assert_relative_eq!(f_b(0.0, 1.1, &p), l.alpha[3], epsilon = 1e-15);
    }

    #[test]
    fn leslie_values_at_half_order() {
        // Term-by-term evaluation with q = 0.5, xi = 0.8, Gamma = 2, mu = 1.
        let p = MaterialParams { xi: 0.8, gamma_rot: 2.0, mu: 1.0, ..unit() };
        let l = leslie_coefficients(0.5, &p);
        // Exact rationals from an independent fraction-arithmetic evaluation.
        let expected = [-16.0 / 75.0, -7.0 / 24.0, -1.0 / 24.0, 458.0 / 225.0, 53.0 / 150.0, 1.0 / 50.0];
        for (a, e) in l.alpha.iter().zip(expected) {
            assert_relative_eq!(*a, e, epsilon = 1e-15, max_relative = 1e-14);
        }
        assert_relative_eq!(l.gamma1, 0.25, epsilon = 1e-15);
        assert_relative_eq!(l.gamma2, -0.333_333_333_333_333_3, epsilon = 1e-15);
    }

    #[test]
    fn f_a_reference_point() {
        // q = 0.7, theta = pi/3, xi = Gamma = mu = 1, evaluated term by term.
        let p = unit();
        let q: f64 = 0.7;
        let a1 = -2.0 / 3.0 * 0.49 * (3.0 + 2.8 - 1.96);
        let a2 = -0.7 * 2.7 / 3.0 - 0.49;
        let a3 = -0.7 * 2.7 / 3.0 + 0.49;
        let a4 = 4.0 / 9.0 * 0.09 + 2.0;
        let a5 = 0.7 * 3.3 / 3.0 + 0.7 * 2.7 / 3.0;
        let a6 = 0.7 * 3.3 / 3.0 - 0.7 * 2.7 / 3.0;
        let expected = a1 / 2.0 * 0.75 + (a5 - a2) * 0.25 + (a3 + a6) * 0.75 + a4;
        assert_relative_eq!(f_a(q, PI / 3.0, &p), expected, epsilon = 1e-14);
        assert_relative_eq!(expected, 2.1996, epsilon = 1e-12);
    }

    #[test]
    fn f_a_and_f_b_special_angles() {
        let p = MaterialParams { xi: 0.9, gamma_rot: 1.7, ..unit() };
        let l = leslie_coefficients(0.6, &p);
        let [_, a2, _, a4, a5, _] = l.alpha;
        assert_relative_eq!(l.f_a(0.0), a5 - a2 + a4, epsilon = 1e-15);
        assert_relative_eq!(l.f_b(PI / 2.0), a2 + a5 + a4, epsilon = 1e-14);
    }

    #[test]
    fn bulk_energy_values() {
        let p = unit();
        assert_eq!(bulk_energy_density(0.0, &p), 0.0);
        assert_relative_eq!(bulk_energy_density(1.0, &p), -7.0 / 64.0, epsilon = 1e-16);
    }

    #[test]
    fn lep_map_values() {
        let p = MaterialParams { xi: 1.0, lambda1: 2.0, zeta: 1.0, l1: 0.3, activity: 0.4, ..unit() };
        let m = lep_param_map(0.5, &p);
        assert_relative_eq!(m.zeta, -0.25, epsilon = 1e-15);
        assert_relative_eq!(m.k, 0.15, epsilon = 1e-15);
        assert_eq!(m.lambda1, 2.0);
        assert_eq!(m.delta_chi, 0.4);

        let z = lep_param_map(0.0, &p);
        assert_eq!(z.zeta, 0.0);
        assert_eq!(z.k, 0.0);
        let one = lep_param_map(1.0, &p);
        assert_eq!(one.zeta, 1.0);
        assert_relative_eq!(one.k, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn passive_predicate() {
        let mut p = unit();
        assert!(p.passive());
        p.activity = 0.1;
        assert!(p.passive());
        p.zeta = 0.5;
        assert!(!p.passive());
        p.zeta = 0.0;
        p.lambda1 = -1.0;
        assert!(!p.passive());
        p.activity = 0.0;
        assert!(p.passive());
    }

    #[test]
    fn validation_rejects_nonpositive() {
        let p = MaterialParams { c2: 0.0, ..unit() };
        assert!(p.validate().is_err());
        let p = MaterialParams { gamma_rot: -1.0, ..unit() };
        assert!(p.validate().is_err());
        assert!(unit().validate().is_ok());
    }

    #[test]
    fn angle_reduction_keeps_raw() {
        let bc = AnchoringData::new(-0.25, PI + 0.5, 0.3, 0.4);
        assert_relative_eq!(bc.theta1_reduced(), PI - 0.25, epsilon = 1e-15);
        assert_relative_eq!(bc.theta2_reduced(), 0.5, epsilon = 1e-14);
        assert_eq!(bc.theta1, -0.25);
        assert!(reduce_angle(-1e-300) < PI);
    }

    fn dimensional() -> DimensionalInputs {
        DimensionalInputs {
            length: 2.0,
            velocity: 1e-3,
            mu: 1.0,
            surface_tension: 1e3,
            l1: 1.0,
            gamma_rot: 0.5,
            xi: 0.8,
            a2: 1.0,
            c2: 2.0,
            delta_chi: 1.0,
            lambda1: 1.0,
            zeta: 1.0,
        }
    }

    #[test]
    fn aspect_ratio_is_cube_root() {
        let (eps, _) = nondimensionalize(&dimensional()).unwrap();
        assert_relative_eq!(eps, 1e-2, max_relative = 1e-14);
        let d = DimensionalInputs { velocity: 8e-3, ..dimensional() };
        let (eps, _) = nondimensionalize(&d).unwrap();
        assert_relative_eq!(eps, 2e-2, max_relative = 1e-14);
    }

    #[test]
    fn elastic_group_inversion() {
        let d = dimensional();
        let eps = 1e-2;
        let d = DimensionalInputs { l1: eps * d.mu * d.velocity * d.length, ..d };
        let (_, p) = nondimensionalize(&d).unwrap();
        assert_relative_eq!(p.l1, 1.0, max_relative = 1e-13);
        assert_eq!(p.mu, 1.0);
    }

    #[test]
    fn nondimensionalize_rejects_nonpositive() {
        let d = DimensionalInputs { surface_tension: 0.0, ..dimensional() };
        assert!(matches!(nondimensionalize(&d), Err(Error::Domain(_))));
    }
}
