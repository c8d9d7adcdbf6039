mod common;

use std::f64::consts::PI;

use actigel::film::{evolve, DtPolicy, EvolveOptions, FilmState, FluxModel, ThirdDerivative};
use actigel::lubrication::{self, ColumnSettingsSer, LubricationSetup};
use actigel::material::{f_a, AnchoringData, MaterialParams};
use actigel::smallangle::{active_const_theta, evolve_modified_thinfilm};

use common::max_diff;

fn active() -> MaterialParams {
    MaterialParams { xi: -3.0, a2: 1.0, c2: 1.0, activity: 0.1, lambda1: 0.5, zeta: 0.2, ..Default::default() }
}

fn bump(x: f64) -> f64 {
    1.0 + 0.1 * (2.0 * PI * x).cos() + 0.05 * (4.0 * PI * x).sin()
}

/// The classical thin-film equation `eta_t + (eta^3 eta_111 / 3)_1 = 0`.
struct Classical;

impl FluxModel for Classical {
    fn split(&mut self, eta: &[f64], _: &[f64], _: &[f64]) -> actigel::Result<(Vec<f64>, Vec<f64>)> {
        Ok((eta.iter().map(|e| e.powi(3) / 3.0).collect(), vec![0.0; eta.len()]))
    }
}

#[test]
fn thin_film_stepper_is_second_order_in_space() {
    let p = active();
    let sol = active_const_theta(&p).unwrap().plus;
    let opts = EvolveOptions { t_end: 0.01, dt: DtPolicy::Fixed { dt: 1e-4 }, ..Default::default() };
    let solve =
        |n: usize| evolve_modified_thinfilm(&FilmState::periodic(n, 1.0, bump).unwrap(), &sol, &p, &opts).unwrap();
    let reference = solve(256);
    let errors: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let run = solve(n);
            let stride = 256 / n;
            run.last.eta.iter().enumerate().map(|(i, e)| (e - reference.last.eta[i * stride]).abs()).fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 2.0 - 0.1, "{errors:?}");
    }
}

#[test]
fn passive_film_is_the_classical_equation_in_rescaled_time() {
    let p = MaterialParams { activity: 0.0, ..active() };
    let sol = active_const_theta(&p).unwrap().plus;
    let scale = 2.0 / f_a(sol.q1, sol.theta1, &p);
    let film = FilmState::periodic(64, 1.0, bump).unwrap();
    let (t, dt) = (0.02, 2e-4);
    let run = evolve_modified_thinfilm(
        &film,
        &sol,
        &p,
        &EvolveOptions { t_end: t, dt: DtPolicy::Fixed { dt }, ..Default::default() },
    )
    .unwrap();
    let opts = EvolveOptions { t_end: t * scale, dt: DtPolicy::Fixed { dt: dt * scale }, ..Default::default() };
    let classical = evolve(&film, &mut Classical, &opts).unwrap();
    assert!(max_diff(&run.last.eta, &classical.last.eta) <= 1e-6);
    assert!(max_diff(&run.last.eta, &film.eta) > 1e-3);
}

#[test]
fn warm_started_columns_converge_quickly() {
    let p = MaterialParams {
        xi: 0.8,
        a2: 4.0,
        c2: 4.0,
        l1: 0.1,
        activity: 0.05,
        lambda1: 0.5,
        zeta: 1.0,
        ..Default::default()
    };
    let bc = AnchoringData::new(0.1, 0.4, 0.5, 0.9);
    let film = FilmState::periodic(16, 1.0, |x| 0.3 + 0.03 * (2.0 * PI * x).cos()).unwrap();
    let setup =
        LubricationSetup { settings: ColumnSettingsSer { nodes: 41, ..Default::default() }, ..Default::default() };
    let opts = EvolveOptions {
        t_end: 0.02,
        dt: DtPolicy::Fixed { dt: 1e-3 },
        third: ThirdDerivative::FourthOrder,
        ..Default::default()
    };
    let field = lubrication::initialize(&film, &bc, &p, &setup, opts.third).unwrap();
    let run = lubrication::evolve(&field, &p, &bc, &setup, &opts).unwrap();
    assert_eq!(run.newton_iterations.len(), 20);
    assert!(run.newton_iterations.iter().all(|&k| k <= 5), "{:?}", run.newton_iterations);
}
