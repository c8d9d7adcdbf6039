//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes a JSON request and returns a JSON reply, so the page
//! needs no generated type glue beyond the function names.

use std::f64::consts::PI;

use actigel::column::ColumnSettings;
use actigel::film::{DtPolicy, EvolveOptions, FilmState};
use actigel::flatfilm::active_flatfilm_bvp;
use actigel::material::{leslie_coefficients, AnchoringData, MaterialParams};
use actigel::smallangle::{active_const_theta, evolve_modified_thinfilm, thinfilm_coefficients, Branch};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("bad request: {0}")]
    Request(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] actigel::Error),
}

impl From<DemoError> for JsValue {
    fn from(e: DemoError) -> Self {
        JsValue::from_str(&e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct FlatRequest {
    pub material: MaterialParams,
    pub anchoring: AnchoringData,
    pub eta: f64,
    #[serde(default = "default_column_nodes")]
    pub nodes: usize,
}

fn default_column_nodes() -> usize {
    101
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatReply {
    pub x3: Vec<f64>,
    pub theta: Vec<f64>,
    pub q: Vec<f64>,
    pub v1: Vec<f64>,
    pub max_abs_v1: f64,
}

/// Flat-film column under the given activity.
pub fn flat_profile(req: &FlatRequest) -> Result<FlatReply, DemoError> {
    let settings = ColumnSettings { nodes: req.nodes, ..Default::default() };
    let col = active_flatfilm_bvp(&req.anchoring, req.eta, &req.material, &settings)?;
    let max_abs_v1 = col.max_abs_v1();
    Ok(FlatReply { x3: col.x3, theta: col.theta, q: col.q, v1: col.v1, max_abs_v1 })
}

#[derive(Debug, Clone, Deserialize)]
pub struct ViscosityRequest {
    pub material: MaterialParams,
    pub q: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    181
}

#[derive(Debug, Clone, Serialize)]
pub struct ViscosityReply {
    pub theta: Vec<f64>,
    pub f_a: Vec<f64>,
    pub f_b: Vec<f64>,
    pub torque: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// `f_A`, `f_B` and the torque factor over one period of the director angle.
pub fn viscosity_curves(req: &ViscosityRequest) -> Result<ViscosityReply, DemoError> {
    req.material.validate()?;
    let c = leslie_coefficients(req.q, &req.material);
    let n = req.samples.max(2);
    let theta: Vec<f64> = (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect();
    Ok(ViscosityReply {
        f_a: theta.iter().map(|&t| c.f_a(t)).collect(),
        f_b: theta.iter().map(|&t| c.f_b(t)).collect(),
        torque: theta.iter().map(|&t| c.torque(t)).collect(),
        theta,
        gamma1: c.gamma1,
        gamma2: c.gamma2,
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct FilmRequest {
    pub material: MaterialParams,
    #[serde(default = "default_branch")]
    pub branch: Branch,
    pub amplitude: f64,
    #[serde(default = "default_mode")]
    pub mode: u32,
    pub t_end: f64,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_film_nodes")]
    pub nodes: usize,
}

fn default_branch() -> Branch {
    Branch::Plus
}

fn default_mode() -> u32 {
    1
}

fn default_frames() -> usize {
    20
}

fn default_film_nodes() -> usize {
    64
}

#[derive(Debug, Clone, Serialize)]
pub struct FilmReply {
    pub q: f64,
    pub theta: f64,
    pub advection: f64,
    pub x1: Vec<f64>,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

/// Evolution of a perturbed film at the constant-angle state.
pub fn thin_film(req: &FilmRequest) -> Result<FilmReply, DemoError> {
    let pair = active_const_theta(&req.material)?;
    let sol = match req.branch {
        Branch::Plus => pair.plus,
        Branch::Minus => pair.minus,
    };
    let (_, advection) = thinfilm_coefficients(&sol, &req.material)?;
    let k = 2.0 * PI * req.mode as f64;
    let mut film = FilmState::periodic(req.nodes, 1.0, |x| 1.0 + req.amplitude * (k * x).cos())?;
    let frames = req.frames.max(1);
    let mut reply = FilmReply {
        q: sol.q1,
        theta: sol.theta1,
        advection,
        x1: film.x1.clone(),
        times: vec![0.0],
        frames: vec![film.eta.clone()],
        mass: vec![film.mass()],
    };
    for f in 1..=frames {
        let opts = EvolveOptions {
            t_end: req.t_end * f as f64 / frames as f64,
            dt: DtPolicy::Advective { cfl: 0.5, max_dt: req.t_end / (50 * frames) as f64 },
            ..Default::default()
        };
        film = evolve_modified_thinfilm(&film, &sol, &req.material, &opts)?.last;
        reply.times.push(film.time);
        reply.frames.push(film.eta.clone());
        reply.mass.push(film.mass());
    }
    Ok(reply)
}

fn call<Q: for<'de> Deserialize<'de>, R: Serialize>(
    request: &str,
    f: impl Fn(&Q) -> Result<R, DemoError>,
) -> Result<String, JsValue> {
    let req: Q = serde_json::from_str(request).map_err(DemoError::from)?;
    let reply = f(&req)?;
    Ok(serde_json::to_string(&reply).map_err(DemoError::from)?)
}

#[wasm_bindgen(js_name = flatProfile)]
pub fn flat_profile_js(request: &str) -> Result<String, JsValue> {
    call(request, flat_profile)
}

#[wasm_bindgen(js_name = viscosityCurves)]
pub fn viscosity_curves_js(request: &str) -> Result<String, JsValue> {
    call(request, viscosity_curves)
}

#[wasm_bindgen(js_name = thinFilm)]
pub fn thin_film_js(request: &str) -> Result<String, JsValue> {
    call(request, thin_film)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn material() -> MaterialParams {
        MaterialParams { xi: -3.0, a2: 1.0, c2: 1.0, ..Default::default() }
    }

    #[test]
    fn viscosity_difference_is_torque() {
        let r = viscosity_curves(&ViscosityRequest { material: material(), q: 0.8, samples: 7 }).unwrap();
        assert_eq!(r.theta.len(), 7);
        for i in 0..7 {
            assert!((r.f_a[i] - r.f_b[i] - r.torque[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn passive_flat_column_is_at_rest() {
        let req: FlatRequest = serde_json::from_str(
            r#"{"material": {"xi": 1.0, "gamma_rot": 1.0, "mu": 1.0, "l1": 0.5, "a2": 1.0, "c2": 1.0},
                "anchoring": {"theta1": 0.1, "theta2": 0.5, "q1": 1.0, "q2": 1.2}, "eta": 1.0, "nodes": 41}"#,
        )
        .unwrap();
        let r = flat_profile(&req).unwrap();
        assert_eq!(r.x3.len(), 41);
        assert!(r.max_abs_v1 < 1e-12);
    }

    #[test]
    fn film_frames_conserve_mass() {
        let req = FilmRequest {
            material: MaterialParams { activity: 0.1, lambda1: 0.5, zeta: 0.2, ..material() },
            branch: Branch::Plus,
            amplitude: 0.1,
            mode: 1,
            t_end: 0.01,
            frames: 4,
            nodes: 32,
        };
        let r = thin_film(&req).unwrap();
        assert_eq!(r.frames.len(), 5);
        assert!((r.times[4] - 0.01).abs() < 1e-15);
        assert!(r.mass.iter().all(|m| (m - r.mass[0]).abs() < 1e-12));
    }

    #[test]
    fn malformed_request_is_reported() {
        assert!(matches!(
            serde_json::from_str::<ViscosityRequest>("{}").map_err(DemoError::from),
            Err(DemoError::Request(_))
        ));
    }
}

#[cfg(test)]
mod page_defaults {
    use super::*;

    const MATERIAL: &str = r#"{"xi": 0.8, "gamma_rot": 1, "mu": 1, "l1": 0.5, "a2": 1, "c2": 1, "activity": 0.05, "lambda1": 0.5, "zeta": 1}"#;

    #[test]
    fn flat_request_solves() {
        let req = format!(
            r#"{{"material": {MATERIAL}, "anchoring": {{"theta1": 0.1, "theta2": 0.5, "q1": 1.0, "q2": 1.2}}, "eta": 1}}"#
        );
        let reply: serde_json::Value = serde_json::from_str(&flat_profile_js(&req).unwrap()).unwrap();
        assert!(reply["max_abs_v1"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn film_request_runs() {
        let req = r#"{"material": {"xi": -3, "gamma_rot": 1, "mu": 1, "l1": 0.5, "a2": 1, "c2": 1, "activity": 0.1, "lambda1": 0.5, "zeta": 0.2},
                      "amplitude": 0.2, "mode": 1, "t_end": 0.02, "frames": 4}"#;
        let reply: serde_json::Value = serde_json::from_str(&thin_film_js(req).unwrap()).unwrap();
        assert_eq!(reply["frames"].as_array().unwrap().len(), 5);
    }
}
