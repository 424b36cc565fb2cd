//! Closing a set of edge lines into a bounded convex polygon.

use std::f64::consts::PI;

use super::ShapeEstimate;
use crate::geometry::{Line, Vec2};

/// A closed reconstruction: lines oriented with outward normals, sorted by
/// normal angle, and the vertices between consecutive lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedPolygon {
    pub edges: Vec<Line>,
    /// `vertices[i]` joins `edges[i]` and `edges[i + 1]`.
    pub vertices: Vec<Vec2>,
}

const TOLERANCE: f64 = 1e-6;

/// Intersect angularly sorted lines into a polygon. Returns `None` when
/// there are fewer than three lines, the arrangement is unbounded, or some
/// line does not contribute an edge of the convex region.
pub fn close_polygon(shape: &ShapeEstimate) -> Option<ClosedPolygon> {
    let k = shape.lines.len();
    if k < 3 {
        return None;
    }
    let interior = shape.lines.iter().map(|l| l.anchor).sum::<Vec2>() / k as f64;
    let mut edges: Vec<(f64, Line)> = shape
        .lines
        .iter()
        .map(|l| {
            let line = if l.line.signed_distance(&interior) > 0.0 {
                l.line.flipped()
            } else {
                l.line
            };
            (line.b.atan2(line.a).rem_euclid(2.0 * PI), line)
        })
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    for i in 0..k {
        let next = if i + 1 == k {
            edges[0].0 + 2.0 * PI
        } else {
            edges[i + 1].0
        };
        let gap = next - edges[i].0;
        if gap <= 0.0 || gap >= PI {
            return None;
        }
    }
    let lines: Vec<Line> = edges.into_iter().map(|(_, l)| l).collect();
    let mut vertices = Vec::with_capacity(k);
    for i in 0..k {
        vertices.push(lines[i].intersect(&lines[(i + 1) % k])?);
    }
    // every vertex must satisfy every half-plane, and the interior point
    // must be strictly inside
    for v in &vertices {
        if lines.iter().any(|l| l.signed_distance(v) > TOLERANCE) {
            return None;
        }
    }
    if lines.iter().any(|l| l.signed_distance(&interior) >= 0.0) {
        return None;
    }
    // each edge must have positive length
    for i in 0..k {
        let prev = vertices[(i + k - 1) % k];
        if (vertices[i] - prev).norm() < TOLERANCE {
            return None;
        }
    }
    Some(ClosedPolygon {
        edges: lines,
        vertices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruct::FittedLine;

    fn line(p: Vec2, d: Vec2) -> FittedLine {
        FittedLine {
            line: Line::from_point_direction(&p, &d),
            support: Default::default(),
            sigma1: 0.0,
            sigma2: 0.0,
            completed: false,
            anchor: p,
        }
    }

    fn square() -> ShapeEstimate {
        ShapeEstimate {
            lines: vec![
                line(Vec2::new(0.0, -2.0), Vec2::new(1.0, 0.0)),
                line(Vec2::new(0.0, 2.0), Vec2::new(-1.0, 0.0)),
                line(Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)),
                line(Vec2::new(-2.0, 0.0), Vec2::new(0.0, 1.0)),
            ],
        }
    }

    #[test]
    fn square_closes() {
        let p = close_polygon(&square()).unwrap();
        assert_eq!(p.vertices.len(), 4);
        for v in &p.vertices {
            assert!((v.x.abs() - 2.0).abs() < 1e-12 && (v.y.abs() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_sides_of_square_open() {
        let mut s = square();
        s.lines.pop();
        assert!(close_polygon(&s).is_none());
    }

    #[test]
    fn redundant_line_rejected() {
        let mut s = square();
        // a line cutting off nothing, outside the square
        s.lines
            .push(line(Vec2::new(3.0, 3.0), Vec2::new(1.0, -1.0)));
        assert!(close_polygon(&s).is_none());
    }
}
