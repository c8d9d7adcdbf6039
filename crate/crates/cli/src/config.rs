//! Scenario configuration (TOML).

use std::path::Path;

use actigel::column::ColumnSettings;
use actigel::film::{DtPolicy, EvolveOptions, FilmState, ThirdDerivative};
use actigel::lep::LepModel;
use actigel::lubrication::ColumnMode;
use actigel::material::{leslie_coefficients, AnchoringData, MaterialParams};
use actigel::smallangle::Branch;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Flatfilm,
    Smallangle,
    Lubrication,
    Lep,
    Diagnostics,
    Crosscheck,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::Flatfilm => "flatfilm",
            Scenario::Smallangle => "smallangle",
            Scenario::Lubrication => "lubrication",
            Scenario::Lep => "lep",
            Scenario::Diagnostics => "diagnostics",
            Scenario::Crosscheck => "crosscheck",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    pub material: MaterialParams,
    pub anchoring: AnchoringData,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub lep: Option<LepSection>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    /// Mean thickness; also the column height of flat-film runs.
    pub eta: f64,
    /// Periodic `x1` nodes.
    pub nodes: usize,
    pub length: f64,
    /// Relative amplitude of the cosine perturbation of the initial film.
    pub amplitude: f64,
    pub mode: u32,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { eta: 1.0, nodes: 64, length: 1.0, amplitude: 0.0, mode: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatMethod {
    Auto,
    Trivial,
    Quadrature,
    Bvp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub column_nodes: usize,
    pub column_mode: ColumnMode,
    pub tol: f64,
    pub max_iter: usize,
    pub t_end: f64,
    /// Fixed step; when absent the step follows `cfl` and `max_dt`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub max_dt: f64,
    pub third_derivative: ThirdDerivative,
    pub floor: f64,
    pub sweeps: usize,
    pub snapshot_every: usize,
    pub flat_method: FlatMethod,
    pub branch: Branch,
}

impl Default for Solver {
    fn default() -> Self {
        let c = ColumnSettings::default();
        let e = EvolveOptions::default();
        Self {
            column_nodes: c.nodes,
            column_mode: ColumnMode::Full,
            tol: c.bvp.tol,
            max_iter: c.bvp.max_iter,
            t_end: 0.1,
            dt: None,
            cfl: 0.5,
            max_dt: 1e-3,
            third_derivative: ThirdDerivative::FourthOrder,
            floor: e.floor,
            sweeps: e.sweeps,
            snapshot_every: 0,
            flat_method: FlatMethod::Auto,
            branch: Branch::Plus,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Write the per-column long table with the final film.
    pub columns: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self { columns: true }
    }
}

/// Standalone LEP data; without it the model is mapped from the material at
/// `anchoring.q1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LepSection {
    pub alpha: [f64; 6],
    pub k: f64,
    pub zeta: f64,
    pub delta_chi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Diagnostics {
    pub q_threshold: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self { q_threshold: actigel::diagnostics::DEFAULT_Q_THRESHOLD }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Schema-level checks that need more than the deserializer.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let g = &self.geometry;
        if !(g.eta > 0.0) {
            return bad(format!("geometry.eta must be positive, got {}", g.eta));
        }
        if !(g.length > 0.0) {
            return bad(format!("geometry.length must be positive, got {}", g.length));
        }
        if g.nodes < 8 {
            return bad(format!("geometry.nodes must be at least 8, got {}", g.nodes));
        }
        if !(g.amplitude.abs() < 1.0) {
            return bad(format!("geometry.amplitude must lie in (-1, 1), got {}", g.amplitude));
        }
        let s = &self.solver;
        if s.column_nodes < 3 {
            return bad(format!("solver.column_nodes must be at least 3, got {}", s.column_nodes));
        }
        if !(s.tol > 0.0) || s.max_iter == 0 {
            return bad("solver.tol and solver.max_iter must be positive".into());
        }
        if !(s.t_end >= 0.0) {
            return bad(format!("solver.t_end must be non-negative, got {}", s.t_end));
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0) {
                return bad(format!("solver.dt must be positive, got {dt}"));
            }
        }
        if !(s.cfl > 0.0) || !(s.max_dt > 0.0) {
            return bad("solver.cfl and solver.max_dt must be positive".into());
        }
        if s.sweeps == 0 {
            return bad("solver.sweeps must be at least 1".into());
        }
        if !(self.diagnostics.q_threshold > 0.0) {
            return bad(format!("diagnostics.q_threshold must be positive, got {}", self.diagnostics.q_threshold));
        }
        Ok(())
    }

    pub fn column_settings(&self) -> ColumnSettings {
        let mut c =
            ColumnSettings { nodes: self.solver.column_nodes, mode: self.solver.column_mode, ..Default::default() };
        c.bvp.tol = self.solver.tol;
        c.bvp.max_iter = self.solver.max_iter;
        c
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        let s = &self.solver;
        EvolveOptions {
            t_end: s.t_end,
            dt: match s.dt {
                Some(dt) => DtPolicy::Fixed { dt },
                None => DtPolicy::Advective { cfl: s.cfl, max_dt: s.max_dt },
            },
            floor: s.floor,
            third: s.third_derivative,
            sweeps: s.sweeps,
            snapshot_every: s.snapshot_every,
        }
    }

    pub fn initial_film(&self) -> actigel::Result<FilmState> {
        let g = &self.geometry;
        let k = 2.0 * std::f64::consts::PI * g.mode as f64 / g.length;
        FilmState::periodic(g.nodes, g.length, |x| g.eta * (1.0 + g.amplitude * (k * x).cos()))
    }

    pub fn lep_model(&self) -> LepModel {
        match &self.lep {
            Some(l) => LepModel::from_alphas(l.alpha, l.k, l.zeta, l.delta_chi),
            None => LepModel::mapped(self.anchoring.q1, &self.material),
        }
    }

    /// Physical-range warnings; never fatal.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (p, bc) = (&self.material, &self.anchoring);
        if let Err(e) = p.validate() {
            out.push(format!("material: {e}"));
        }
        if let Err(e) = bc.validate() {
            out.push(format!("anchoring: {e}"));
        }
        let c1 = leslie_coefficients(bc.q1, p);
        let fa = c1.f_a(bc.theta1);
        let scale = c1.alpha.iter().map(|a| a.abs()).fold(p.mu.abs(), f64::max);
        if fa.abs() < 1e-3 * scale {
            out.push(format!("f_A(q1, theta1) = {fa:e} is close to zero; columns may hit a viscosity singularity"));
        }
        let c2 = leslie_coefficients(bc.q2, p);
        let fb = c2.f_b(bc.theta2);
        if p.activity != 0.0 && fb.abs() < 1e-3 * scale {
            out.push(format!("f_B(q2, theta2) = {fb:e} is close to zero; the surface closure is near singular"));
        }
        if self.scenario == Scenario::Flatfilm && p.passive() && (bc.q1 - bc.q2).abs() < 1e-14 {
            let slope = (bc.theta2 - bc.theta1) / self.geometry.eta;
            let rad = 2.0 * p.a2 / p.c2 - 8.0 * p.l1 / p.c2 * slope * slope;
            if rad < 0.0 {
                out.push(format!("linear flat solution does not exist: order-parameter radicand {rad} < 0"));
            }
        }
        if self.scenario == Scenario::Lep && self.lep.is_none() && bc.q1 != bc.q2 {
            out.push("LEP run maps parameters at q1; q2 is ignored".into());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "flatfilm"
[material]
xi = 0.8
gamma_rot = 1.0
mu = 1.0
l1 = 0.1
a2 = 1.0
c2 = 2.0
[anchoring]
theta1 = 0.1
theta2 = 0.3
q1 = 1.0
q2 = 1.0
"#;

    #[test]
    fn defaults_fill_optional_sections() {
        let c = Config::parse(MINIMAL).unwrap();
        c.check().unwrap();
        assert_eq!(c.solver.column_nodes, 201);
        assert_eq!(c.geometry.nodes, 64);
        assert_eq!(c.material.activity, 0.0);
    }

    #[test]
    fn unknown_fields_are_reported_with_location() {
        let text = MINIMAL.replace("l1 = 0.1", "l1 = 0.1\nl2 = 3.0");
        let CliError::Config(msg) = Config::parse(&text).unwrap_err() else { panic!() };
        assert!(msg.contains("l2") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = Config::parse(MINIMAL).unwrap();
        let again = Config::parse(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(toml::to_string(&c).unwrap(), toml::to_string(&again).unwrap());
    }
}
