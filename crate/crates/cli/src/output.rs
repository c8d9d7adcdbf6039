//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use actigel::column::ColumnProfile;
use actigel::film::{FilmState, Trajectory};
use actigel::lubrication::LubricationField;
use serde_json::Value;

use crate::config::Config;
use crate::CliError;

/// Shortest round-trip text of `v`, switching to exponent form for very
/// small or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A comma-separated table with `#` comment lines above the column names.
#[derive(Debug, Clone, Default)]
pub struct Table {
    comments: Vec<String>,
    columns: String,
    rows: String,
}

impl Table {
    pub fn new(comments: &[String], columns: &[&str]) -> Self {
        Self { comments: comments.to_vec(), columns: columns.join(","), rows: String::new() }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(self.rows, "{}", cells.join(","));
    }

    /// Row with pre-formatted cells, for text or missing entries.
    pub fn raw_row(&mut self, cells: &[String]) {
        let _ = writeln!(self.rows, "{}", cells.join(","));
    }

    pub fn comment(&mut self, c: &str) {
        self.comments.push(c.to_string());
    }

    pub fn into_string(self) -> String {
        let mut text = String::new();
        for c in &self.comments {
            let _ = writeln!(text, "# {c}");
        }
        let _ = writeln!(text, "{}", self.columns);
        text + &self.rows
    }
}

/// Header lines echoing the parameters of a run.
pub fn header(cfg: &Config) -> Vec<String> {
    let p = &cfg.material;
    let bc = &cfg.anchoring;
    vec![
        format!("actigel {}", env!("CARGO_PKG_VERSION")),
        format!("scenario = {}", cfg.scenario.tag()),
        format!(
            "material: xi = {}, gamma_rot = {}, mu = {}, l1 = {}, a2 = {}, c2 = {}, activity = {}, lambda1 = {}, zeta = {}",
            p.xi, p.gamma_rot, p.mu, p.l1, p.a2, p.c2, p.activity, p.lambda1, p.zeta
        ),
        format!("anchoring: theta1 = {}, theta2 = {}, q1 = {}, q2 = {}", bc.theta1, bc.theta2, bc.q1, bc.q2),
    ]
}

pub fn profile_table(head: &[String], col: &ColumnProfile) -> String {
    let mut t = Table::new(head, &["x3", "theta", "q", "v1"]);
    t.comment(&format!("eta = {}", col.eta));
    for i in 0..col.nodes() {
        let q = col.q.get(i).map_or(String::new(), |&v| fmt_f64(v));
        t.raw_row(&[fmt_f64(col.x3[i]), fmt_f64(col.theta[i]), q, fmt_f64(col.v1[i])]);
    }
    t.into_string()
}

pub fn trajectory_table(head: &[String], traj: &Trajectory) -> String {
    let mut t = Table::new(head, &["time", "mass", "min_eta", "max_eta"]);
    for s in &traj.samples {
        t.row(&[s.time, s.mass, s.min_eta, s.max_eta]);
    }
    t.into_string()
}

pub fn film_table(head: &[String], film: &FilmState) -> String {
    let mut t = Table::new(head, &["x1", "eta"]);
    t.comment(&format!("time = {}", film.time));
    for (x, e) in film.x1.iter().zip(&film.eta) {
        t.row(&[*x, *e]);
    }
    t.into_string()
}

/// Long format `(x1, x3, theta, q, v1)` over all columns; `q` is left blank
/// for director-only columns.
pub fn columns_table(head: &[String], field: &LubricationField) -> String {
    let mut t = Table::new(head, &["x1", "x3", "theta", "q", "v1"]);
    t.comment(&format!("time = {}", field.film.time));
    for (x1, col) in field.film.x1.iter().zip(&field.columns) {
        for i in 0..col.nodes() {
            let q = col.q.get(i).map_or(String::new(), |&v| fmt_f64(v));
            t.raw_row(&[fmt_f64(*x1), fmt_f64(col.x3[i]), fmt_f64(col.theta[i]), q, fmt_f64(col.v1[i])]);
        }
    }
    t.into_string()
}

/// Everything a scenario produces, held in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub summary: serde_json::Map<String, Value>,
}

impl Artifacts {
    pub fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn trajectory(&mut self, head: &[String], traj: &Trajectory) {
        self.file("trajectory.csv", trajectory_table(head, traj));
        self.file("film.csv", film_table(head, &traj.last));
        for (k, snap) in traj.snapshots.iter().enumerate() {
            self.file(format!("snapshot_{k:04}.csv"), film_table(head, snap));
        }
        let first = traj.samples.first().map_or(f64::NAN, |s| s.mass);
        let last = traj.samples.last().map_or(f64::NAN, |s| s.mass);
        self.note("steps", traj.samples.len().saturating_sub(1));
        self.note("final_time", traj.last.time);
        self.note("mass_relative_drift", ((last - first) / first).abs());
        self.note("min_eta", traj.last.min_eta());
        self.note("max_eta", traj.last.max_eta());
    }

    /// Writes all files plus `manifest.json` into `dir`.
    pub fn commit(self, dir: &Path, cfg: &Config, model: &str) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut names = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            names.push(Value::from(name.as_str()));
            written.push(path);
        }
        let manifest = serde_json::json!({
            "tool": "actigel",
            "version": env!("CARGO_PKG_VERSION"),
            "model": model,
            "config": cfg,
            "outputs": names,
            "summary": self.summary,
        });
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
        written.push(path);
        Ok(written)
    }
}
