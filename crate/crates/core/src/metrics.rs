//! Accuracy measures: point MSE against the true edges, edge direction
//! error and closure of the reconstructed polygon.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{undirected_angle_diff, Vec2};
use crate::reconstruct::{close_polygon, ShapeEstimate};
use crate::scene::ConvexPolygon;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("no fitted line lies near any true edge")]
    NoMatches,
}

/// Squared distance to the nearest edge segment, averaged over points.
pub fn point_mse(points: &[Vec2], target: &ConvexPolygon) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::EmptyPointSet);
    }
    let total: f64 = points
        .iter()
        .map(|p| {
            let d = target
                .edges()
                .map(|e| e.distance_to(p))
                .fold(f64::INFINITY, f64::min);
            d * d
        })
        .sum();
    Ok(total / points.len() as f64)
}

/// Per-line match against the true edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMatch {
    /// For each fitted line, the matched edge and its angle error in degrees.
    pub matches: Vec<Option<(usize, f64)>>,
}

impl DirectionMatch {
    pub fn matched(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.matches.iter().flatten().copied()
    }

    pub fn unmatched(&self) -> usize {
        self.matches.iter().filter(|m| m.is_none()).count()
    }

    pub fn mean_error(&self) -> Result<f64, MetricsError> {
        let errs: Vec<f64> = self.matched().map(|(_, e)| e).collect();
        if errs.is_empty() {
            return Err(MetricsError::NoMatches);
        }
        Ok(errs.iter().sum::<f64>() / errs.len() as f64)
    }
}

/// Match every fitted line to the edge with the smallest direction
/// difference among edges whose midpoint lies within `radius` of it.
pub fn match_directions(
    shape: &ShapeEstimate,
    target: &ConvexPolygon,
    radius: f64,
) -> DirectionMatch {
    let matches = shape
        .lines
        .iter()
        .map(|l| {
            target
                .edges()
                .enumerate()
                .filter(|(_, e)| l.line.distance(&e.midpoint()) <= radius)
                .map(|(i, e)| {
                    let d = e.direction();
                    let edge_angle = d.y.atan2(d.x);
                    (
                        i,
                        undirected_angle_diff(l.line.angle(), edge_angle).to_degrees(),
                    )
                })
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        })
        .collect();
    DirectionMatch { matches }
}

/// Mean direction error in degrees over matched lines.
pub fn direction_error(
    shape: &ShapeEstimate,
    target: &ConvexPolygon,
    radius: f64,
) -> Result<f64, MetricsError> {
    match_directions(shape, target, radius).mean_error()
}

/// The lines close into a bounded convex polygon with the true edge count.
pub fn is_closed(shape: &ShapeEstimate, target: &ConvexPolygon) -> bool {
    shape.num_edges() == target.num_edges() && close_polygon(shape).is_some()
}

/// Outcome of one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub snr_db: f64,
    pub method: String,
    pub trial: usize,
    /// `None` when no scattering point was detected.
    pub mse: Option<f64>,
    /// Degrees; `None` when no line matched an edge.
    pub direction_error: Option<f64>,
    pub closed: bool,
    pub num_points: usize,
    pub num_edges: usize,
    /// Set when the pipeline failed; the other fields are then defaults.
    pub failure: Option<String>,
    pub runtime: f64,
}

/// Fraction of closed trials.
pub fn close_rate(trials: &[TrialResult]) -> f64 {
    if trials.is_empty() {
        return 0.0;
    }
    trials.iter().filter(|t| t.closed).count() as f64 / trials.len() as f64
}

/// Sample mean and (population) standard deviation; `None` when empty.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Line;
    use crate::reconstruct::FittedLine;

    fn square() -> ConvexPolygon {
        ConvexPolygon::square(Vec2::zeros(), 4.0).unwrap()
    }

    #[test]
    fn on_edge_points_zero() {
        let pts = [Vec2::new(0.0, -2.0), Vec2::new(2.0, 1.0)];
        assert_eq!(point_mse(&pts, &square()).unwrap(), 0.0);
    }

    #[test]
    fn offset_point() {
        let mse = point_mse(&[Vec2::new(0.0, 2.3)], &square()).unwrap();
        assert!((mse - 0.09).abs() < 1e-12);
        assert_eq!(point_mse(&[], &square()), Err(MetricsError::EmptyPointSet));
    }

    fn fitted(p: Vec2, angle_deg: f64) -> FittedLine {
        let a = angle_deg.to_radians();
        FittedLine {
            line: Line::from_point_direction(&p, &Vec2::new(a.cos(), a.sin())),
            support: Default::default(),
            sigma1: 0.0,
            sigma2: 0.0,
            completed: false,
            anchor: p,
        }
    }

    #[test]
    fn rotated_line_error() {
        let shape = ShapeEstimate {
            lines: vec![fitted(Vec2::new(0.0, 2.0), 1.0)],
        };
        let e = direction_error(&shape, &square(), 0.6).unwrap();
        assert!((e - 1.0).abs() < 1e-9);
        let far = ShapeEstimate {
            lines: vec![fitted(Vec2::new(0.0, 9.0), 0.0)],
        };
        assert_eq!(
            direction_error(&far, &square(), 0.6),
            Err(MetricsError::NoMatches)
        );
    }

    #[test]
    fn close_rate_counts() {
        let t = |closed| TrialResult {
            snr_db: 0.0,
            method: "x".into(),
            trial: 0,
            mse: None,
            direction_error: None,
            closed,
            num_points: 0,
            num_edges: 0,
            failure: None,
            runtime: 0.0,
        };
        assert_eq!(close_rate(&[t(true), t(false), t(true), t(true)]), 0.75);
    }
}
