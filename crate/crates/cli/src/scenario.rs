//! Dispatch from a configuration to the solvers.

use actigel::diagnostics::{detect_defects, energies, FieldGrid};
use actigel::film::FilmState;
use actigel::flatfilm::{
    active_flatfilm_bvp, compatibility_profile, flat_residual, solve_compatibility, trivial_flat_solution_on,
};
use actigel::lep::{lep_evolve, lep_field};
use actigel::lubrication::{self, ColumnMode, ColumnSettingsSer, LubricationField, LubricationSetup};
use actigel::smallangle::{active_const_theta, evolve_modified_thinfilm, thinfilm_coefficients, Branch};

use crate::config::{Config, FlatMethod, Scenario};
use crate::output::{columns_table, fmt_f64, header, profile_table, Artifacts, Table};
use crate::CliError;

pub fn run(cfg: &Config) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::default();
    match cfg.scenario {
        Scenario::Flatfilm => flatfilm(cfg, &mut out)?,
        Scenario::Smallangle => smallangle(cfg, &mut out)?,
        Scenario::Lubrication => {
            let field = lubrication_run(cfg, &mut out)?;
            if cfg.output.columns {
                out.file("columns.csv", columns_table(&header(cfg), &field));
            }
        }
        Scenario::Lep => lep(cfg, &mut out)?,
        Scenario::Diagnostics => diagnostics(cfg, &mut out)?,
        Scenario::Crosscheck => crosscheck(cfg, &mut out)?,
    }
    Ok(out)
}

fn flatfilm(cfg: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let (p, bc, eta) = (&cfg.material, &cfg.anchoring, cfg.geometry.eta);
    let nodes = cfg.solver.column_nodes;
    let method = match cfg.solver.flat_method {
        FlatMethod::Auto if !p.passive() => FlatMethod::Bvp,
        FlatMethod::Auto if bc.q1 == bc.q2 => FlatMethod::Trivial,
        FlatMethod::Auto => FlatMethod::Quadrature,
        m => m,
    };
    let profile = match method {
        FlatMethod::Trivial => trivial_flat_solution_on(bc, eta, p, nodes)?,
        FlatMethod::Quadrature => {
            let roots = solve_compatibility(bc, eta, p)?;
            out.note("c1", roots.c1);
            out.note("c2", roots.c2);
            out.note("compatibility_residual", roots.residual_norm);
            out.note("roots_found", roots.all_roots.len());
            compatibility_profile(&roots, bc, eta, p, nodes)?
        }
        FlatMethod::Bvp | FlatMethod::Auto => active_flatfilm_bvp(bc, eta, p, &cfg.column_settings())?,
    };
    out.note("method", format!("{method:?}").to_lowercase());
    out.note("max_abs_v1", profile.max_abs_v1());
    out.note("flat_residual", flat_residual(&profile, bc, p)?);
    out.file("profile.csv", profile_table(&header(cfg), &profile));
    Ok(())
}

fn smallangle(cfg: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let p = &cfg.material;
    let pair = active_const_theta(p)?;
    let sol = match cfg.solver.branch {
        Branch::Plus => pair.plus,
        Branch::Minus => pair.minus,
    };
    let (fa, c) = thinfilm_coefficients(&sol, p)?;
    out.note("q", sol.q1);
    out.note("theta", sol.theta1);
    out.note("cos_two_theta", pair.cos_two_theta);
    out.note("f_a", fa);
    out.note("advection", c);
    let traj = evolve_modified_thinfilm(&cfg.initial_film()?, &sol, p, &cfg.evolve_options())?;
    out.trajectory(&header(cfg), &traj);
    Ok(())
}

fn setup(cfg: &Config) -> LubricationSetup {
    let s = &cfg.solver;
    LubricationSetup {
        settings: ColumnSettingsSer { nodes: s.column_nodes, mode: s.column_mode, tol: s.tol, max_iter: s.max_iter },
        ..Default::default()
    }
}

fn lubrication_run(cfg: &Config, out: &mut Artifacts) -> Result<LubricationField, CliError> {
    let (p, bc) = (&cfg.material, &cfg.anchoring);
    let setup = setup(cfg);
    let opts = cfg.evolve_options();
    let field0 = lubrication::initialize(&cfg.initial_film()?, bc, p, &setup, opts.third)?;
    let run = lubrication::evolve(&field0, p, bc, &setup, &opts)?;
    out.trajectory(&header(cfg), &run.trajectory);
    out.note("max_newton_iterations", run.newton_iterations.iter().copied().max().unwrap_or(0));
    Ok(run.last)
}

fn lep(cfg: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let model = cfg.lep_model();
    let bc = &cfg.anchoring;
    let run = lep_evolve(
        &cfg.initial_film()?,
        &model,
        (bc.theta1, bc.theta2),
        &cfg.column_settings(),
        &cfg.evolve_options(),
    )?;
    let head = header(cfg);
    out.trajectory(&head, &run.trajectory);
    out.note("frank_modulus", model.k);
    out.note("active_stress", model.zeta * model.delta_chi);
    out.note("max_newton_iterations", run.newton_iterations.iter().copied().max().unwrap_or(0));
    if cfg.output.columns {
        out.file("columns.csv", columns_table(&head, &run.last));
    }
    Ok(())
}

fn diagnostics(cfg: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let field = if cfg.solver.t_end > 0.0 {
        lubrication_run(cfg, out)?
    } else {
        lubrication::initialize(
            &cfg.initial_film()?,
            &cfg.anchoring,
            &cfg.material,
            &setup(cfg),
            cfg.solver.third_derivative,
        )?
    };
    let head = header(cfg);
    let grid = FieldGrid::from_field(&field)?;
    let defects = detect_defects(&grid, cfg.diagnostics.q_threshold);
    let mut t = Table::new(&head, &["x1", "x3", "q_min", "winding", "kind"]);
    for d in &defects {
        t.raw_row(&[
            fmt_f64(d.x1),
            fmt_f64(d.x3),
            fmt_f64(d.q_min),
            d.winding.map_or(String::new(), fmt_f64),
            format!("{:?}", d.kind).to_lowercase(),
        ]);
    }
    out.file("defects.csv", t.into_string());
    let e = energies(&field, &cfg.material)?;
    let mut t = Table::new(&head, &["time", "bulk", "elastic"]);
    t.row(&[field.film.time, e.bulk, e.elastic]);
    out.file("energies.csv", t.into_string());
    out.note("defects", defects.len());
    out.note("bulk_energy", e.bulk);
    out.note("elastic_energy", e.elastic);
    if cfg.output.columns {
        out.file("columns.csv", columns_table(&head, &field));
    }
    Ok(())
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn crosscheck(cfg: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let (p, bc) = (&cfg.material, &cfg.anchoring);
    if bc.q1 != bc.q2 {
        return Err(CliError::Config("crosscheck needs anchoring.q1 = anchoring.q2".into()));
    }
    if cfg.lep.is_some() {
        return Err(CliError::Config("crosscheck maps the LEP model from the material; remove [lep]".into()));
    }
    let mut setup = setup(cfg);
    setup.settings.mode = ColumnMode::ConstantQ;
    let opts = cfg.evolve_options();
    let film0: FilmState = cfg.initial_film()?;
    let model = cfg.lep_model();
    let theta_bc = (bc.theta1, bc.theta2);
    let settings = actigel::column::ColumnSettings::from(setup.settings);

    let ericksen = lubrication::initialize(&film0, bc, p, &setup, opts.third)?;
    let lep0 = lep_field(&film0, &model, theta_bc, &settings, &opts)?;
    let (mut d_theta, mut d_v1) = (0.0f64, 0.0f64);
    for (a, b) in ericksen.columns.iter().zip(&lep0.columns) {
        d_theta = d_theta.max(max_deviation(&a.theta, &b.theta));
        d_v1 = d_v1.max(max_deviation(&a.v1, &b.v1));
    }
    let e_run = lubrication::evolve(&ericksen, p, bc, &setup, &opts)?;
    let l_run = lep_evolve(&film0, &model, theta_bc, &settings, &opts)?;
    let d_eta = max_deviation(&e_run.trajectory.last.eta, &l_run.trajectory.last.eta);

    let mut t = Table::new(&header(cfg), &["quantity", "max_deviation"]);
    t.comment(&format!("t_end = {}", e_run.trajectory.last.time));
    for (name, v) in [("column_theta", d_theta), ("column_v1", d_v1), ("final_eta", d_eta)] {
        t.raw_row(&[name.to_string(), fmt_f64(v)]);
        out.note(name, v);
    }
    out.file("crosscheck.csv", t.into_string());
    Ok(())
}
