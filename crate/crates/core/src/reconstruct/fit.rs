//! PCA line fitting and the two validity tests applied to each candidate.

use crate::geometry::{Line, Vec2};

/// Result of fitting a line to a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaFit {
    pub line: Line,
    pub centroid: Vec2,
    /// Standard deviation along the line, m.
    pub sigma1: f64,
    /// Standard deviation across the line, m.
    pub sigma2: f64,
}

/// Total least squares line through `points`. `None` when there are fewer
/// than two points or they all coincide.
pub fn pca_fit(points: &[Vec2]) -> Option<PcaFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vec2>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - centroid;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    sxx /= n;
    sxy /= n;
    syy /= n;
    let half_trace = (sxx + syy) / 2.0;
    let disc = (((sxx - syy) / 2.0).powi(2) + sxy * sxy).sqrt();
    let major = half_trace + disc;
    let minor = (half_trace - disc).max(0.0);
    if major <= 0.0 {
        return None;
    }
    // principal direction angle of the symmetric 2x2 matrix
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let dir = Vec2::new(angle.cos(), angle.sin());
    Some(PcaFit {
        line: Line::from_point_direction(&centroid, &dir),
        centroid,
        sigma1: major.sqrt(),
        sigma2: minor.sqrt(),
    })
}

/// Asymptotic Kolmogorov distribution tail `P(K > lambda)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov statistic of `values` against the uniform
/// distribution on their own range, with its approximate p-value.
pub fn ks_uniform(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n < 2 {
        return (0.0, 1.0);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[n - 1]);
    if hi <= lo {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (x - lo) / (hi - lo);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    (d, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d))
}

/// Largest gap between consecutive sorted `values`, as a fraction of their
/// range, with its exact p-value under a uniform distribution whose end
/// points are the sample extremes.
pub fn max_gap_uniform(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n < 3 {
        return (1.0, 1.0);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let range = v[n - 1] - v[0];
    if range <= 0.0 {
        return (1.0, 0.0);
    }
    let gap = v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / range;
    // n - 2 interior points split [0, 1] into n - 1 spacings:
    // P(max > g) = sum_k (-1)^(k+1) C(n-1, k) (1 - k g)^(n-2)
    let spacings = n - 1;
    let mut p = 0.0;
    let mut binom = 1.0;
    for k in 1..=spacings {
        binom *= (spacings - k + 1) as f64 / k as f64;
        let base = 1.0 - k as f64 * gap;
        if base <= 0.0 {
            break;
        }
        let term = binom * base.powi((n - 2) as i32);
        p += if k % 2 == 1 { term } else { -term };
    }
    (gap, p.clamp(0.0, 1.0))
}

/// Signed positions of `points` along `line`.
pub fn projections(points: &[Vec2], line: &Line) -> Vec<f64> {
    points.iter().map(|p| line.project(p)).collect()
}

/// Uniform spread along the line and an elongated spread
/// (`sigma1 / sigma2 >= ratio`, infinite when `sigma2` is zero).
///
/// Uniformity must survive both the KS test and the largest-gap test at
/// `alpha`; the gap test catches two separated clusters, which KS misses
/// at the small sample sizes typical of a Hough cell.
pub fn is_valid_line(points: &[Vec2], fit: &PcaFit, alpha: f64, ratio: f64) -> bool {
    let proj = projections(points, &fit.line);
    let (_, p_ks) = ks_uniform(&proj);
    let (_, p_gap) = max_gap_uniform(&proj);
    let elongated = fit.sigma2 == 0.0 || fit.sigma1 / fit.sigma2 >= ratio;
    p_ks >= alpha && p_gap >= alpha && elongated
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_points() {
        let pts: Vec<Vec2> = (0..5).map(|i| Vec2::new(i as f64, i as f64)).collect();
        let f = pca_fit(&pts).unwrap();
        assert!((f.line.angle().to_degrees() - 45.0).abs() < 1e-9);
        assert!(f.sigma2 < 1e-12);
    }

    #[test]
    fn two_points_exact() {
        let a = Vec2::new(1.0, 2.0);
        let b = Vec2::new(4.0, -1.0);
        let f = pca_fit(&[a, b]).unwrap();
        assert!(f.line.distance(&a) < 1e-12 && f.line.distance(&b) < 1e-12);
    }

    #[test]
    fn identical_points_rejected() {
        assert!(pca_fit(&[Vec2::new(1.0, 1.0); 3]).is_none());
    }

    #[test]
    fn even_spacing_is_valid() {
        let pts: Vec<Vec2> = (0..50).map(|i| Vec2::new(i as f64 * 0.1, 1.0)).collect();
        let f = pca_fit(&pts).unwrap();
        assert!(is_valid_line(&pts, &f, 0.05, 5.0));
    }

    #[test]
    fn end_clusters_fail_uniformity() {
        let mut pts: Vec<Vec2> = (0..25).map(|i| Vec2::new(i as f64 * 0.01, 0.0)).collect();
        pts.extend((0..25).map(|i| Vec2::new(10.0 + i as f64 * 0.01, 0.0)));
        let f = pca_fit(&pts).unwrap();
        let (d, p) = ks_uniform(&projections(&pts, &f.line));
        assert!(d > 0.45 && p < 1e-6);
        assert!(!is_valid_line(&pts, &f, 0.05, 5.0));
    }

    #[test]
    fn max_gap_null_distribution() {
        // three points: the middle one is uniform, P(max gap > g) = 2(1 - g) for g >= 1/2
        let (g, p) = max_gap_uniform(&[0.0, 0.2, 1.0]);
        assert!((g - 0.8).abs() < 1e-12);
        assert!((p - 0.4).abs() < 1e-12);
        let (_, p) = max_gap_uniform(&[0.0, 0.5, 1.0]);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_end_clusters_fail_gap_test() {
        let v = [0.0, 0.04, 0.08, 0.92, 0.96, 1.0];
        assert!(ks_uniform(&v).1 > 0.05);
        assert!(max_gap_uniform(&v).1 < 0.01);
    }

    #[test]
    fn kolmogorov_tail_known_values() {
        // P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.0098
        assert!((kolmogorov_tail(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_tail(1.63) - 0.0098).abs() < 5e-4);
    }
}
