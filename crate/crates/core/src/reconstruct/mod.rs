//! Polygon edge reconstruction from a scattering point cloud (Hough voting,
//! PCA line fits, validity tests, support merging) and its refinement with
//! reflection points.

pub mod fit;
pub mod hough;
pub mod polygon;
pub mod refine;

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{undirected_angle_diff, Line, Vec2};

pub use fit::{is_valid_line, ks_uniform, pca_fit, PcaFit};
pub use hough::{hough_transform, HoughCell, HoughGrid};
pub use polygon::{close_polygon, ClosedPolygon};
pub use refine::{refine_with_reflection, RefineEvent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("invalid reconstruction parameters: {0}")]
    BadParams(String),
}

/// Thresholds and grid sizes for line extraction and refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionParams {
    /// Minimum ratio of along-line to across-line standard deviation.
    pub gamma_v: f64,
    /// Fraction of a cell's points in a line's support at or above which
    /// the cell may merge into that line.
    pub gamma_l: f64,
    /// Fraction of a cell's points already claimed by some line at or below
    /// which the cell may start a new line.
    pub gamma_u: f64,
    /// Maximum direction difference for merging, rad.
    pub eps_theta: f64,
    /// A reflection line is a repeat of a scatter line when its mean
    /// distance to that line's support is within this multiple of the fit's own.
    pub gamma_s: f64,
    /// Weight of the reflection point when fusing a line offset.
    pub lambda_r: f64,
    /// Hough cell size, m.
    pub delta_rho: f64,
    /// Hough cell size, rad.
    pub delta_theta: f64,
    /// Cells with fewer votes are ignored.
    pub min_points: usize,
    /// Significance level of the uniformity test.
    pub alpha_u: f64,
}

impl Default for ReconstructionParams {
    fn default() -> Self {
        Self {
            gamma_v: 5.0,
            gamma_l: 0.2,
            gamma_u: 0.5,
            eps_theta: 1f64.to_radians(),
            gamma_s: 3.0,
            lambda_r: 0.5,
            delta_rho: 0.2,
            delta_theta: 2f64.to_radians(),
            min_points: 8,
            alpha_u: 0.05,
        }
    }
}

impl ReconstructionParams {
    pub fn validate(&self) -> Result<(), ReconstructError> {
        let bad = |m: &str| Err(ReconstructError::BadParams(m.to_string()));
        if !(0.0 < self.gamma_l && self.gamma_l < self.gamma_u && self.gamma_u <= 1.0) {
            return bad("need 0 < gamma_l < gamma_u <= 1");
        }
        if !(self.gamma_v > 1.0) {
            return bad("gamma_v must exceed 1");
        }
        if !(self.eps_theta > 0.0 && self.delta_theta > 0.0 && self.delta_rho > 0.0) {
            return bad("angle tolerance and Hough cell sizes must be positive");
        }
        if !(self.gamma_s > 0.0) || !(0.0..=1.0).contains(&self.lambda_r) {
            return bad("need gamma_s > 0 and lambda_r in [0, 1]");
        }
        if !(self.alpha_u > 0.0 && self.alpha_u < 1.0) {
            return bad("alpha_u must lie in (0, 1)");
        }
        Ok(())
    }
}

/// One edge estimate and the points supporting it.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedLine {
    pub line: Line,
    /// Indices into the scattering point cloud.
    pub support: BTreeSet<usize>,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Added from a reflection rather than fitted to scattering points.
    pub completed: bool,
    /// A point known to lie on the edge: the support centroid, or the
    /// reflection point for completed lines.
    pub anchor: Vec2,
}

impl FittedLine {
    fn from_fit(fit: &PcaFit, support: BTreeSet<usize>) -> Self {
        Self {
            line: fit.line,
            support,
            sigma1: fit.sigma1,
            sigma2: fit.sigma2,
            completed: false,
            anchor: fit.centroid,
        }
    }
}

/// The reconstructed edge set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShapeEstimate {
    pub lines: Vec<FittedLine>,
}

impl ShapeEstimate {
    pub fn num_edges(&self) -> usize {
        self.lines.len()
    }
}

fn gather(points: &[Vec2], idx: impl IntoIterator<Item = usize>) -> Vec<Vec2> {
    idx.into_iter().map(|i| points[i]).collect()
}

/// Merge a validated cell into every similar line. A cell that merged
/// nowhere starts a new line when few of its points are already claimed
/// by existing supports.
pub fn merge_or_add(
    cell: &BTreeSet<usize>,
    cell_fit: &PcaFit,
    points: &[Vec2],
    shape: &mut ShapeEstimate,
    params: &ReconstructionParams,
) {
    let claimed = cell
        .iter()
        .filter(|i| shape.lines.iter().any(|l| l.support.contains(i)))
        .count();
    let mut is_new = claimed as f64 / cell.len() as f64 <= params.gamma_u;
    for line in shape.lines.iter_mut() {
        if line.support.is_empty() {
            continue;
        }
        let common = cell.intersection(&line.support).count() as f64;
        let overlap = common / cell.len() as f64;
        let similar =
            undirected_angle_diff(cell_fit.line.angle(), line.line.angle()) <= params.eps_theta;
        if overlap >= params.gamma_l && similar {
            is_new = false;
            line.support.extend(cell.iter().copied());
            if let Some(f) = pca_fit(&gather(points, line.support.iter().copied())) {
                let completed = line.completed;
                *line = FittedLine::from_fit(&f, std::mem::take(&mut line.support));
                line.completed = completed;
            }
        }
    }
    if is_new {
        shape
            .lines
            .push(FittedLine::from_fit(cell_fit, cell.clone()));
    }
}

/// Extract edges from a scattering point cloud.
pub fn ht_pca_tsr(points: &[Vec2], params: &ReconstructionParams) -> ShapeEstimate {
    let mut shape = ShapeEstimate::default();
    let cells = hough_transform(
        points,
        params.delta_rho,
        params.delta_theta,
        params.min_points,
    );
    for cell in cells {
        let pts = gather(points, cell.points.iter().copied());
        let Some(f) = pca_fit(&pts) else {
            continue;
        };
        if !is_valid_line(&pts, &f, params.alpha_u, params.gamma_v) {
            continue;
        }
        let set: BTreeSet<usize> = cell.points.into_iter().collect();
        merge_or_add(&set, &f, points, &mut shape, params);
    }
    shape
}

/// Write the shape as CSV. Line rows carry `a,b,c,support_size,completed`;
/// when the lines close into a polygon, vertex rows carry `x,y`.
pub fn write_shape_csv<W: Write>(
    shape: &ShapeEstimate,
    closed: Option<&ClosedPolygon>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "a", "b", "c", "support_size", "completed", "x", "y"])?;
    for l in &shape.lines {
        w.write_record([
            "line".to_string(),
            l.line.a.to_string(),
            l.line.b.to_string(),
            l.line.c.to_string(),
            l.support.len().to_string(),
            l.completed.to_string(),
            String::new(),
            String::new(),
        ])?;
    }
    if let Some(poly) = closed {
        for v in &poly.vertices {
            w.write_record([
                "vertex".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                v.x.to_string(),
                v.y.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
