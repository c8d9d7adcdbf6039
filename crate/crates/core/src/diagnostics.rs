//! Defect detection, the director regularity indicator and energies of a
//! solved film.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::column::ColumnProfile;
use crate::error::{Error, Result};
use crate::lubrication::{nodal_integral, LubricationField};
use crate::material::{bulk_energy_density, MaterialParams};

pub const DEFAULT_Q_THRESHOLD: f64 = 1e-3;

/// Order parameter and director angle on a column-aligned grid: column `i`
/// sits at `x1[i]` with nodes `x3[i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub x1: Vec<f64>,
    pub x3: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    /// Period in `x1`, if the grid wraps around.
    pub period: Option<f64>,
}

impl FieldGrid {
    pub fn from_field(field: &LubricationField) -> Result<Self> {
        let cols = &field.columns;
        if cols.is_empty() || cols.len() != field.film.len() {
            return Err(Error::InvalidParameter("field has no columns for its film nodes".into()));
        }
        let n3 = cols[0].nodes();
        if cols.iter().any(|c| c.nodes() != n3 || c.q.len() != n3) {
            return Err(Error::InvalidParameter(
                "diagnostics need order-parameter columns with equal node counts".into(),
            ));
        }
        Ok(Self {
            x1: field.film.x1.clone(),
            x3: cols.iter().map(|c| c.x3.clone()).collect(),
            q: cols.iter().map(|c| c.q.clone()).collect(),
            theta: cols.iter().map(|c| c.theta.clone()).collect(),
            period: Some(field.film.period()),
        })
    }

    /// Samples `f(x1, x3) -> (q, theta)` on a rectangle.
    pub fn sample(x1: &[f64], x3: &[f64], f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut q = Vec::with_capacity(x1.len());
        let mut theta = Vec::with_capacity(x1.len());
        for &a in x1 {
            let (qs, ts): (Vec<f64>, Vec<f64>) = x3.iter().map(|&b| f(a, b)).unzip();
            q.push(qs);
            theta.push(ts);
        }
        Self { x1: x1.to_vec(), x3: vec![x3.to_vec(); x1.len()], q, theta, period: None }
    }

    fn n1(&self) -> usize {
        self.x1.len()
    }

    fn n3(&self) -> usize {
        self.x3.first().map_or(0, Vec::len)
    }

    /// Column index `i + di`, wrapped when periodic.
    fn column(&self, i: usize, di: isize) -> Option<(usize, f64)> {
        let n = self.n1() as isize;
        let k = i as isize + di;
        if (0..n).contains(&k) {
            return Some((k as usize, 0.0));
        }
        let period = self.period?;
        let shift = if k < 0 { -period } else { period };
        Some((k.rem_euclid(n) as usize, shift))
    }

    fn cell_count(&self) -> usize {
        if self.period.is_some() {
            self.n1()
        } else {
            self.n1().saturating_sub(1)
        }
    }
}

/// Difference of director angles taken modulo `pi`, so `n` and `-n` agree.
pub fn director_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    if d > FRAC_PI_2 {
        d - PI
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectKind {
    Point,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub x1: f64,
    pub x3: f64,
    pub q_min: f64,
    pub kind: DefectKind,
    /// Index of the connected cluster the candidate belongs to.
    pub cluster: usize,
    pub winding: Option<f64>,
}

/// Minimum of the bilinear interpolant of `|q|` over the cells around node
/// `(i, j)`, by dense sampling.
fn refine(grid: &FieldGrid, i: usize, j: usize) -> (f64, f64, f64) {
    const SUB: usize = 16;
    let mut best = (grid.x1[i], grid.x3[i][j], grid.q[i][j].abs());
    for di in [-1isize, 0] {
        for dj in [-1isize, 0] {
            let (Some((ia, sa)), Some((ib, sb))) = (grid.column(i, di), grid.column(i, di + 1)) else {
                continue;
            };
            let ja = j as isize + dj;
            if ja < 0 || ja as usize + 1 >= grid.n3() {
                continue;
            }
            let ja = ja as usize;
            let corner = |c: usize, s: f64, jj: usize| (grid.x1[c] + s, grid.x3[c][jj], grid.q[c][jj]);
            let (a00, a01, b00, b01) =
                (corner(ia, sa, ja), corner(ia, sa, ja + 1), corner(ib, sb, ja), corner(ib, sb, ja + 1));
            for u in 0..=SUB {
                let s = u as f64 / SUB as f64;
                for v in 0..=SUB {
                    let t = v as f64 / SUB as f64;
                    let mix = |f: fn(&(f64, f64, f64)) -> f64| {
                        (1.0 - s) * ((1.0 - t) * f(&a00) + t * f(&a01)) + s * ((1.0 - t) * f(&b00) + t * f(&b01))
                    };
                    let q = mix(|c| c.2).abs();
                    if q < best.2 {
                        best = (mix(|c| c.0), mix(|c| c.1), q);
                    }
                }
            }
        }
    }
    best
}

/// Local minima of `|q|` below `threshold`, refined below the grid scale.
/// Connected candidates spanning at least three nodes are reported as a
/// line, every node of it listed; smaller clusters give one point.
pub fn detect_defects(grid: &FieldGrid, threshold: f64) -> Vec<Defect> {
    let (n1, n3) = (grid.n1(), grid.n3());
    let mut candidate = vec![vec![false; n3]; n1];
    for i in 0..n1 {
        for j in 0..n3 {
            let v = grid.q[i][j].abs();
            if !(v < threshold) {
                continue;
            }
            let mut minimum = true;
            'nb: for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    let jj = j as isize + dj;
                    if (di, dj) == (0, 0) || jj < 0 || jj as usize >= n3 {
                        continue;
                    }
                    if let Some((ii, _)) = grid.column(i, di) {
                        if grid.q[ii][jj as usize].abs() < v {
                            minimum = false;
                            break 'nb;
                        }
                    }
                }
            }
            candidate[i][j] = minimum;
        }
    }

    let mut label = vec![vec![usize::MAX; n3]; n1];
    let mut clusters: Vec<Vec<(usize, usize)>> = Vec::new();
    for i in 0..n1 {
        for j in 0..n3 {
            if !candidate[i][j] || label[i][j] != usize::MAX {
                continue;
            }
            let id = clusters.len();
            let mut members = Vec::new();
            let mut stack = vec![(i, j)];
            label[i][j] = id;
            while let Some((a, b)) = stack.pop() {
                members.push((a, b));
                for di in -1isize..=1 {
                    for dj in -1isize..=1 {
                        let bb = b as isize + dj;
                        if bb < 0 || bb as usize >= n3 {
                            continue;
                        }
                        if let Some((aa, _)) = grid.column(a, di) {
                            let bb = bb as usize;
                            if candidate[aa][bb] && label[aa][bb] == usize::MAX {
                                label[aa][bb] = id;
                                stack.push((aa, bb));
                            }
                        }
                    }
                }
            }
            members.sort_unstable();
            clusters.push(members);
        }
    }

    let mut out = Vec::new();
    for (id, members) in clusters.iter().enumerate() {
        if members.len() >= 3 {
            for &(i, j) in members {
                out.push(Defect {
                    x1: grid.x1[i],
                    x3: grid.x3[i][j],
                    q_min: grid.q[i][j].abs(),
                    kind: DefectKind::Line,
                    cluster: id,
                    winding: None,
                });
            }
        } else {
            let (x1, x3, q_min) = members
                .iter()
                .map(|&(i, j)| refine(grid, i, j))
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .expect("clusters are non-empty");
            let (i, j) = members[0];
            let winding = (2..=4).find_map(|r| winding(grid, i, j, r, threshold).ok());
            out.push(Defect { x1, x3, q_min, kind: DefectKind::Point, cluster: id, winding });
        }
    }
    out
}

/// Degree of the director on the square loop of half-width `radius` nodes
/// around node `(i, j)`. Fails if the loop leaves the grid or meets
/// `|q| < threshold`.
pub fn winding(grid: &FieldGrid, i: usize, j: usize, radius: usize, threshold: f64) -> Result<f64> {
    let r = radius as isize;
    let (j0, j1) = (j as isize - r, j as isize + r);
    if radius == 0 || j0 < 0 || j1 as usize >= grid.n3() {
        return Err(Error::Domain("winding loop leaves the grid".into()));
    }
    let mut path = Vec::new();
    for d in -r..r {
        path.push((d, -r));
    }
    for d in -r..r {
        path.push((r, d));
    }
    for d in -r..r {
        path.push((-d, r));
    }
    for d in -r..r {
        path.push((-r, -d));
    }
    let mut values = Vec::with_capacity(path.len());
    for (di, dj) in path {
        let (c, _) = grid.column(i, di).ok_or_else(|| Error::Domain("winding loop leaves the grid".into()))?;
        let jj = (j as isize + dj) as usize;
        if grid.q[c][jj].abs() < threshold {
            return Err(Error::Domain("winding loop crosses a defect core".into()));
        }
        values.push(grid.theta[c][jj]);
    }
    let total: f64 = (0..values.len()).map(|k| director_difference(values[(k + 1) % values.len()], values[k])).sum();
    let degree = total / (2.0 * PI);
    if ((2.0 * degree).round() as i64) % 2 != 0 {
        log::warn!("half-integer winding {degree} at node ({i}, {j}); the angle representation cannot resolve it");
    }
    Ok(degree)
}

/// `sqrt(|q|) |grad theta|` at cell centres, with `grad theta` from
/// director differences of the four corners.
fn cell_values(grid: &FieldGrid) -> Vec<(f64, f64, f64)> {
    let n3 = grid.n3();
    let mut out = Vec::new();
    for i in 0..grid.cell_count() {
        let Some((k, shift)) = grid.column(i, 1) else { continue };
        let dx1 = grid.x1[k] + shift - grid.x1[i];
        for j in 0..n3.saturating_sub(1) {
            let (ta, tb) = (&grid.theta[i], &grid.theta[k]);
            let (za, zb) = (&grid.x3[i], &grid.x3[k]);
            let d3a = director_difference(ta[j + 1], ta[j]) / (za[j + 1] - za[j]);
            let d3b = director_difference(tb[j + 1], tb[j]) / (zb[j + 1] - zb[j]);
            let d3 = 0.5 * (d3a + d3b);
            // Along fixed node index, then corrected for the tilt of the grid lines.
            let d1_index = 0.5 * (director_difference(tb[j], ta[j]) + director_difference(tb[j + 1], ta[j + 1])) / dx1;
            let tilt = 0.5 * ((zb[j] - za[j]) + (zb[j + 1] - za[j + 1])) / dx1;
            let d1 = d1_index - d3 * tilt;
            let q = 0.25 * (grid.q[i][j] + grid.q[i][j + 1] + grid.q[k][j] + grid.q[k][j + 1]);
            let x1 = grid.x1[i] + 0.5 * dx1;
            let x3 = 0.25 * (za[j] + za[j + 1] + zb[j] + zb[j + 1]);
            out.push((x1, x3, q.abs().sqrt() * d1.hypot(d3)));
        }
    }
    out
}

/// Largest `sqrt(|q|) |grad theta|` over cells whose centre lies within
/// `radius` of `point`.
pub fn regularity_indicator(grid: &FieldGrid, point: (f64, f64), radius: f64) -> Result<f64> {
    let inside_x1 = grid.period.is_some() || (grid.x1[0]..=grid.x1[grid.n1() - 1]).contains(&point.0);
    if !inside_x1 || !(radius > 0.0) {
        return Err(Error::Domain(format!("point {point:?} with radius {radius} is not inside the grid")));
    }
    let values = cell_values(grid);
    let mut best = f64::NEG_INFINITY;
    for (x1, x3, v) in values {
        let mut dx = x1 - point.0;
        if let Some(p) = grid.period {
            dx -= p * (dx / p).round();
        }
        if dx.hypot(x3 - point.1) <= radius {
            best = best.max(v);
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Domain(format!("no grid cell within {radius} of {point:?}")));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularityTrend {
    Bounded,
    Unbounded,
}

/// Growth exponent of the indicator against inverse spacing over a
/// refinement sequence, least squares in log-log.
pub fn growth_exponent(spacings: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = spacings.iter().map(|h| -h.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Exponents below this count as bounded.
pub const BOUNDED_EXPONENT: f64 = 0.2;

pub fn classify_regularity(spacings: &[f64], values: &[f64]) -> (RegularityTrend, f64) {
    let p = growth_exponent(spacings, values);
    let trend = if p < BOUNDED_EXPONENT { RegularityTrend::Bounded } else { RegularityTrend::Unbounded };
    (trend, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub bulk: f64,
    pub elastic: f64,
}

/// Bulk and elastic energy of one column, per unit length in `x1`.
pub fn column_energies(col: &ColumnProfile, p: &MaterialParams) -> Result<Energies> {
    if col.q.len() != col.nodes() || col.q_x3.len() != col.nodes() {
        return Err(Error::InvalidParameter("energies need order-parameter columns".into()));
    }
    let bulk: Vec<f64> = col.q.iter().map(|&q| bulk_energy_density(q, p)).collect();
    let elastic: Vec<f64> = (0..col.nodes())
        .map(|k| {
            let (q, dq, dt) = (col.q[k], col.q_x3[k], col.theta_x3[k]);
            p.l1 * (0.75 * dq * dq + 2.0 * q * q * dt * dt)
        })
        .collect();
    Ok(Energies { bulk: nodal_integral(&col.x3, &bulk), elastic: nodal_integral(&col.x3, &elastic) })
}

/// Column energies summed over the periodic film with the rectangle rule.
pub fn energies(field: &LubricationField, p: &MaterialParams) -> Result<Energies> {
    let h = field.film.spacing();
    let mut total = Energies { bulk: 0.0, elastic: 0.0 };
    for col in &field.columns {
        let e = column_energies(col, p)?;
        total.bulk += h * e.bulk;
        total.elastic += h * e.elastic;
    }
    Ok(total)
}
