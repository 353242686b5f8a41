//! Zeeman diagram of the lowest eight levels and anticrossing detection.

use argmin::core::{CostFunction, Executor};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

use super::{diagonalize, SmmParams, ELECTRONIC_J, NUCLEAR_DIM, NUCLEAR_I};
use crate::format::sci;
use crate::linalg::Eigen;
use crate::{Error, Result};

/// Number of levels kept per field point.
pub const DIAGRAM_LEVELS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelLabel {
    pub m_j: f64,
    pub m_i: f64,
}

fn half_integer(x: f64) -> String {
    let twice = (2.0 * x).round() as i64;
    let sign = if twice < 0 { "-" } else { "+" };
    if twice % 2 == 0 {
        format!("{sign}{}", twice.abs() / 2)
    } else {
        format!("{sign}{}/2", twice.abs())
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", half_integer(self.m_j), half_integer(self.m_i))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub b_center_t: f64,
    pub gap_mhz: f64,
    pub m_i: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelDiagram {
    pub params: SmmParams,
    pub b_values_t: Vec<f64>,
    /// Ascending energies (GHz) per field point.
    pub levels_ghz: Vec<[f64; DIAGRAM_LEVELS]>,
    pub labels: Vec<[LevelLabel; DIAGRAM_LEVELS]>,
    /// Splitting (GHz) of the equal-m_I pair for each m_I = 3/2 … −3/2.
    pub pair_gaps_ghz: Vec<[f64; NUCLEAR_DIM]>,
    pub crossings: Vec<AvoidedCrossing>,
}

impl LevelDiagram {
    /// CSV with columns `B_T, E1_GHz..E8_GHz, label1..label8`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["B_T".to_string()];
        header.extend((1..=DIAGRAM_LEVELS).map(|k| format!("E{k}_GHz")));
        header.extend((1..=DIAGRAM_LEVELS).map(|k| format!("label{k}")));
        writeln!(w, "{}", header.join(","))?;
        for ((b, levels), labels) in self.b_values_t.iter().zip(&self.levels_ghz).zip(&self.labels) {
            let mut row = vec![sci(*b)];
            row.extend(levels.iter().map(|&e| sci(e)));
            row.extend(labels.iter().map(|l| l.to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Whether every point has pairwise distinct labels.
    pub fn labels_bijective_at(&self, k: usize) -> bool {
        let l = &self.labels[k];
        (0..DIAGRAM_LEVELS).all(|a| (a + 1..DIAGRAM_LEVELS).all(|b| l[a] != l[b]))
    }
}

fn pair(p: &SmmParams, m_i: f64) -> (usize, usize) {
    (p.product_index(ELECTRONIC_J, m_i).unwrap(), p.product_index(-ELECTRONIC_J, m_i).unwrap())
}

/// Energies of the two eigenstates with most weight on `(±6, m_I)`.
fn pair_gap_from(p: &SmmParams, eig: &Eigen, m_i: f64) -> f64 {
    let (up, down) = pair(p, m_i);
    let mut scored: Vec<(f64, f64)> = (0..eig.dim())
        .map(|k| (eig.vectors[(up, k)].norm_sqr() + eig.vectors[(down, k)].norm_sqr(), eig.values[k]))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    (scored[0].1 - scored[1].1).abs()
}

/// Splitting (GHz) of the `(±6, m_I)` pair at field `b_z`.
pub fn pair_gap_ghz(p: &SmmParams, b_z: f64, m_i: f64) -> Result<f64> {
    let eig = diagonalize(p, b_z)?;
    Ok(pair_gap_from(p, &eig, m_i))
}

struct PointData {
    levels: [f64; DIAGRAM_LEVELS],
    labels: [LevelLabel; DIAGRAM_LEVELS],
    gaps: [f64; NUCLEAR_DIM],
}

fn analyse_point(p: &SmmParams, b_z: f64) -> Result<PointData> {
    let eig = diagonalize(p, b_z)?;
    let mut levels = [0.0; DIAGRAM_LEVELS];
    let mut labels = [LevelLabel { m_j: 0.0, m_i: 0.0 }; DIAGRAM_LEVELS];
    for k in 0..DIAGRAM_LEVELS {
        levels[k] = eig.values[k];
        let col = eig.vectors.column(k);
        let best = (0..col.len())
            .max_by(|&a, &b| col[a].norm_sqr().total_cmp(&col[b].norm_sqr()).then(b.cmp(&a)))
            .unwrap();
        labels[k] = p.product_label(best);
    }
    let mut gaps = [0.0; NUCLEAR_DIM];
    for (n, g) in gaps.iter_mut().enumerate() {
        *g = pair_gap_from(p, &eig, NUCLEAR_I - n as f64);
    }
    Ok(PointData { levels, labels, gaps })
}

/// Lowest eight levels on `n_points` uniformly spaced fields in
/// `[b_min, b_max]` (T), with anticrossings located.
pub fn sweep_spectrum(p: &SmmParams, b_min: f64, b_max: f64, n_points: usize) -> Result<LevelDiagram> {
    p.validate()?;
    if n_points < 2 {
        return Err(Error::InvalidParameter(format!("a sweep needs at least 2 points, got {n_points}")));
    }
    if !(b_min.is_finite() && b_max.is_finite() && b_max > b_min) {
        return Err(Error::InvalidParameter(format!("invalid field window [{b_min}, {b_max}]")));
    }
    let step = (b_max - b_min) / (n_points - 1) as f64;
    let b_values: Vec<f64> = (0..n_points).map(|k| b_min + step * k as f64).collect();
    let points = b_values
        .par_iter()
        .map(|&b| analyse_point(p, b))
        .collect::<Result<Vec<_>>>()?;

    let mut diagram = LevelDiagram {
        params: p.clone(),
        b_values_t: b_values,
        levels_ghz: points.iter().map(|d| d.levels).collect(),
        labels: points.iter().map(|d| d.labels).collect(),
        pair_gaps_ghz: points.iter().map(|d| d.gaps).collect(),
        crossings: Vec::new(),
    };
    diagram.crossings = find_avoided_crossings(&diagram)?;
    Ok(diagram)
}

struct GapCost<'a> {
    params: &'a SmmParams,
    m_i: f64,
    origin: f64,
    width: f64,
}

impl GapCost<'_> {
    // Search runs over u ∈ [1, 2] so the relative tolerance of the golden
    // section is meaningful even when the crossing sits at B = 0.
    fn field(&self, u: f64) -> f64 {
        self.origin + (u - 1.0) * self.width
    }
}

impl CostFunction for GapCost<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, u: &f64) -> std::result::Result<f64, argmin::core::Error> {
        pair_gap_ghz(self.params, self.field(*u), self.m_i).map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

/// Local minima of the equal-m_I pair gaps, refined by golden-section search.
pub fn find_avoided_crossings(d: &LevelDiagram) -> Result<Vec<AvoidedCrossing>> {
    let mut out = Vec::new();
    let n = d.b_values_t.len();
    if n < 3 {
        return Ok(out);
    }
    for slot in 0..NUCLEAR_DIM {
        let m_i = NUCLEAR_I - slot as f64;
        let g: Vec<f64> = d.pair_gaps_ghz.iter().map(|row| row[slot]).collect();
        for k in 1..n - 1 {
            let is_min = g[k] <= g[k - 1] && g[k] <= g[k + 1] && (g[k] < g[k - 1] || g[k] < g[k + 1]);
            if !is_min {
                continue;
            }
            let cost = GapCost {
                params: &d.params,
                m_i,
                origin: d.b_values_t[k - 1],
                width: d.b_values_t[k + 1] - d.b_values_t[k - 1],
            };
            let solver = GoldenSectionSearch::new(1.0, 2.0)?.with_tolerance(1e-10)?;
            let res = Executor::new(cost, solver).configure(|s| s.param(1.5).max_iters(200)).run()?;
            let u = res.state.best_param.unwrap_or(1.5);
            let gap = res.state.best_cost;
            let b_center = res.problem.problem.as_ref().map(|c| c.field(u)).unwrap_or(d.b_values_t[k]);
            out.push(AvoidedCrossing { b_center_t: b_center, gap_mhz: gap * 1e3, m_i });
        }
    }
    out.sort_by(|a, b| a.b_center_t.total_cmp(&b.b_center_t));
    Ok(out)
}
