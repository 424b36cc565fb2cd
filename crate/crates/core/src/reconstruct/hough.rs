//! Hough voting of 2-D points into `(rho, theta)` cells.

use std::collections::BTreeMap;

use crate::geometry::Vec2;

/// One accumulator cell and the indices of the points that voted for it.
#[derive(Debug, Clone, PartialEq)]
pub struct HoughCell {
    pub rho_bin: i64,
    pub theta_bin: usize,
    /// Sorted, unique point indices.
    pub points: Vec<usize>,
}

/// Accumulator over `theta in [0, pi)`, with `rho` measured from the centre
/// of the points' bounding box. Cell `k` is centred on `rho = k * delta_rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoughGrid {
    pub delta_rho: f64,
    pub delta_theta: f64,
    pub origin: Vec2,
    pub num_theta: usize,
    cells: BTreeMap<(i64, usize), Vec<usize>>,
}

impl HoughGrid {
    pub fn build(points: &[Vec2], delta_rho: f64, delta_theta: f64) -> Self {
        let num_theta = (std::f64::consts::PI / delta_theta).ceil() as usize;
        let origin = bbox_center(points);
        let trig: Vec<(f64, f64)> = (0..num_theta)
            .map(|j| (j as f64 * delta_theta).sin_cos())
            .collect();
        let mut cells: BTreeMap<(i64, usize), Vec<usize>> = BTreeMap::new();
        for (idx, p) in points.iter().enumerate() {
            let q = p - origin;
            for (j, &(s, c)) in trig.iter().enumerate() {
                let rho = q.x * c + q.y * s;
                let bin = (rho / delta_rho).round() as i64;
                cells.entry((bin, j)).or_default().push(idx);
            }
        }
        Self {
            delta_rho,
            delta_theta,
            origin,
            num_theta,
            cells,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// All non-empty cells in `(rho_bin, theta_bin)` order.
    pub fn cells(&self) -> impl Iterator<Item = HoughCell> + '_ {
        self.cells
            .iter()
            .map(|(&(rho_bin, theta_bin), pts)| HoughCell {
                rho_bin,
                theta_bin,
                points: pts.clone(),
            })
    }

    /// Cells with at least `min_points` votes, largest first; ties keep
    /// `(rho_bin, theta_bin)` ascending order.
    pub fn sorted_cells(&self, min_points: usize) -> Vec<HoughCell> {
        let mut out: Vec<HoughCell> = self
            .cells()
            .filter(|c| c.points.len() >= min_points)
            .collect();
        // stable sort keeps the map's (rho, theta) order among equal sizes
        out.sort_by_key(|c| std::cmp::Reverse(c.points.len()));
        out
    }
}

fn bbox_center(points: &[Vec2]) -> Vec2 {
    if points.is_empty() {
        return Vec2::zeros();
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo + hi) / 2.0
}

/// Convenience wrapper: build the grid and return the sorted cells.
pub fn hough_transform(
    points: &[Vec2],
    delta_rho: f64,
    delta_theta: f64,
    min_points: usize,
) -> Vec<HoughCell> {
    HoughGrid::build(points, delta_rho, delta_theta).sorted_cells(min_points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_share_a_cell() {
        let pts: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64, 3.0)).collect();
        let cells = hough_transform(&pts, 0.2, 2f64.to_radians(), 5);
        let top = &cells[0];
        assert_eq!(top.points.len(), 10);
        assert_eq!(top.theta_bin, 45);
    }

    #[test]
    fn single_point_leaves_nothing() {
        assert!(hough_transform(&[Vec2::new(1.0, 2.0)], 0.2, 0.05, 5).is_empty());
    }

    #[test]
    fn every_point_votes_once_per_column() {
        let pts: Vec<Vec2> = (0..7)
            .map(|i| Vec2::new((i as f64 * 1.3).sin() * 4.0, i as f64 * 0.7))
            .collect();
        let grid = HoughGrid::build(&pts, 0.2, 2f64.to_radians());
        assert_eq!(grid.num_theta, 90);
        let mut per_column = vec![0; grid.num_theta];
        for c in grid.cells() {
            per_column[c.theta_bin] += c.points.len();
        }
        assert!(per_column.iter().all(|&n| n == pts.len()));
    }
}
