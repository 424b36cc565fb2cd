//! Refining a reconstructed shape with a reflection point and its surface
//! direction.

use std::collections::BTreeSet;

use super::{FittedLine, ReconstructionParams, ShapeEstimate};
use crate::geometry::{Line, Vec2};

/// What a reflection did to the shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefineEvent {
    /// The reflection repeated line `line`; its direction now comes from the
    /// reflection and its offset from the weighted fit.
    Fused {
        line: usize,
        sigma_s: f64,
        sigma_r: f64,
    },
    /// No scatter line matched; the reflection line was appended as `line`.
    Completed {
        line: usize,
        sigma_s: f64,
        sigma_r: f64,
    },
    /// The shape had no scatter lines; the reflection line is the only edge.
    OnlyEdge,
}

fn mean_distance(points: &[Vec2], support: &BTreeSet<usize>, line: &Line) -> f64 {
    support
        .iter()
        .map(|&i| line.distance(&points[i]))
        .sum::<f64>()
        / support.len() as f64
}

/// Offset `c` minimizing `w d^2(p_r, l) + (1 - w) mean d^2(P, l)` for a line
/// with fixed unit normal `normal`.
pub fn fused_offset(normal: &Vec2, reflection: &Vec2, support: &[Vec2], weight: f64) -> f64 {
    let mean = support.iter().map(|p| normal.dot(p)).sum::<f64>() / support.len() as f64;
    -(weight * normal.dot(reflection) + (1.0 - weight) * mean)
}

pub fn refine_with_reflection(
    shape: &mut ShapeEstimate,
    points: &[Vec2],
    position: Vec2,
    surface_dir: Vec2,
    params: &ReconstructionParams,
) -> RefineEvent {
    let reflected = Line::from_point_direction(&position, &surface_dir);
    let completed_line = FittedLine {
        line: reflected,
        support: BTreeSet::new(),
        sigma1: 0.0,
        sigma2: 0.0,
        completed: true,
        anchor: position,
    };
    let closest = shape
        .lines
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.support.is_empty())
        .map(|(k, l)| (k, mean_distance(points, &l.support, &reflected)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let Some((k, sigma_r)) = closest else {
        shape.lines.push(completed_line);
        return RefineEvent::OnlyEdge;
    };
    let target = &mut shape.lines[k];
    let sigma_s = mean_distance(points, &target.support, &target.line);
    if sigma_r <= params.gamma_s * sigma_s {
        let support: Vec<Vec2> = target.support.iter().map(|&i| points[i]).collect();
        let n = reflected.normal();
        target.line = Line {
            a: n.x,
            b: n.y,
            c: fused_offset(&n, &position, &support, params.lambda_r),
        };
        RefineEvent::Fused {
            line: k,
            sigma_s,
            sigma_r,
        }
    } else {
        shape.lines.push(completed_line);
        RefineEvent::Completed {
            line: shape.lines.len() - 1,
            sigma_s,
            sigma_r,
        }
    }
}
