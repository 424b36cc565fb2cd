//! Covariance matrices and 1-D MUSIC frequency estimation.
//!
//! Steering vectors are `a(w) = [1, e^{jw}, ..., e^{j(M-1)w}]^T`. The
//! pseudo-spectrum `1 / (a^H Un Un^H a)` is evaluated through the signal
//! subspace, `a^H Un Un^H a = M - |Us^H a|^2`, which is the same quantity
//! for an orthonormal eigenbasis and lets the coarse grid run as an FFT.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array3, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::EstimateError;
use crate::channel::ChannelTensor;

/// Which axis of the channel tensor a covariance spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceDomain {
    RxAntenna,
    TxAntenna,
    Subcarrier,
}

/// Hermitian positive semidefinite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    data: DMatrix<Complex64>,
    domain: CovarianceDomain,
}

impl CovarianceMatrix {
    /// Forces exact Hermitian symmetry by averaging with the adjoint.
    pub fn new(data: DMatrix<Complex64>, domain: CovarianceDomain) -> Self {
        assert!(data.is_square(), "covariance must be square");
        let data = (&data + data.adjoint()) * Complex64::new(0.5, 0.0);
        Self { data, domain }
    }

    /// `scale * X X^H` for the snapshot matrix `X` (M x L).
    pub fn from_snapshots(x: &DMatrix<Complex64>, scale: f64, domain: CovarianceDomain) -> Self {
        Self::new(x * x.adjoint() * Complex64::new(scale, 0.0), domain)
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn domain(&self) -> CovarianceDomain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: &self.data * Complex64::new(s, 0.0),
            domain: self.domain,
        }
    }

    /// Largest absolute deviation from Hermitian symmetry.
    pub fn hermitian_error(&self) -> f64 {
        (&self.data - self.data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues in descending order with matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = SymmetricEigen::new(self.data.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }
}

/// Search settings for [`music_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MusicSearch {
    /// Coarse grid points over `[-pi, pi)`.
    pub grid: usize,
    /// Restrict the search to `[lo, hi]` (unwrapped, `hi - lo < 2 pi`).
    pub window: Option<(f64, f64)>,
    /// Golden-section stopping width, rad.
    pub tolerance: f64,
}

impl Default for MusicSearch {
    fn default() -> Self {
        Self {
            grid: 4096,
            window: None,
            tolerance: 1e-7,
        }
    }
}

impl MusicSearch {
    pub fn with_grid(grid: usize) -> Self {
        Self {
            grid,
            ..Self::default()
        }
    }
}

/// Wrap an angle into `[-pi, pi)`.
pub fn wrap_pi(w: f64) -> f64 {
    (w + PI).rem_euclid(2.0 * PI) - PI
}

struct SignalSubspace {
    /// Conjugated signal eigenvectors, one per row.
    conj_vectors: Vec<Vec<Complex64>>,
    m: usize,
}

impl SignalSubspace {
    /// `a^H Un Un^H a` at frequency `w`.
    fn denominator(&self, w: f64) -> f64 {
        let step = Complex64::from_polar(1.0, w);
        let mut proj = 0.0;
        for u in &self.conj_vectors {
            // Horner evaluation of sum_m conj(u_m) e^{j w m}
            let mut acc = Complex64::new(0.0, 0.0);
            for c in u.iter().rev() {
                acc = acc * step + c;
            }
            proj += acc.norm_sqr();
        }
        (self.m as f64 - proj).max(0.0)
    }

    /// Denominator on the full grid `w_g = -pi + 2 pi g / G` via zero-padded FFTs.
    fn grid_denominator(&self, grid: usize) -> Vec<f64> {
        if grid < self.m {
            return (0..grid)
                .map(|g| self.denominator(-PI + 2.0 * PI * g as f64 / grid as f64))
                .collect();
        }
        let fft = FftPlanner::new().plan_fft_inverse(grid);
        let mut proj = vec![0.0; grid];
        let mut buf = vec![Complex64::new(0.0, 0.0); grid];
        for u in &self.conj_vectors {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for (m, c) in u.iter().enumerate() {
                buf[m] = if m % 2 == 1 { -*c } else { *c };
            }
            fft.process(&mut buf);
            for (p, b) in proj.iter_mut().zip(&buf) {
                *p += b.norm_sqr();
            }
        }
        proj.into_iter()
            .map(|p| (self.m as f64 - p).max(0.0))
            .collect()
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Estimate the `k` strongest frequencies of `r`. Returns them strongest
/// first, each wrapped into `[-pi, pi)`.
pub fn music_1d(
    r: &CovarianceMatrix,
    k: usize,
    search: &MusicSearch,
) -> Result<Vec<f64>, EstimateError> {
    let m = r.dim();
    if k == 0 || k >= m {
        return Err(EstimateError::InvalidModelOrder { k, m });
    }
    let (values, vectors) = r.eigen();
    let top = values[0];
    let significant = if top > 0.0 && top.is_finite() {
        values.iter().filter(|&&v| v > 1e-10 * top).count()
    } else {
        0
    };
    if significant < k {
        return Err(EstimateError::RankDeficient {
            found: significant,
            needed: k,
        });
    }
    let subspace = SignalSubspace {
        conj_vectors: (0..k)
            .map(|c| vectors.column(c).iter().map(|z| z.conj()).collect())
            .collect(),
        m,
    };

    let step = 2.0 * PI / search.grid as f64;
    // (omega, denominator) samples in search order
    let samples: Vec<(f64, f64)> = match search.window {
        None => subspace
            .grid_denominator(search.grid)
            .into_iter()
            .enumerate()
            .map(|(g, d)| (-PI + step * g as f64, d))
            .collect(),
        Some((lo, hi)) => {
            let first = (lo / step).ceil() as i64;
            let last = (hi / step).floor() as i64;
            (first..=last)
                .map(|g| {
                    let w = g as f64 * step;
                    (w, subspace.denominator(w))
                })
                .collect()
        }
    };
    if samples.is_empty() {
        return Err(EstimateError::InvalidModelOrder { k, m });
    }
    let circular = search.window.is_none();
    let n = samples.len();
    let mut minima: Vec<usize> = (0..n)
        .filter(|&i| {
            let prev = if i == 0 {
                if circular {
                    samples[n - 1].1
                } else {
                    f64::INFINITY
                }
            } else {
                samples[i - 1].1
            };
            let next = if i + 1 == n {
                if circular {
                    samples[0].1
                } else {
                    f64::INFINITY
                }
            } else {
                samples[i + 1].1
            };
            samples[i].1 < prev && samples[i].1 <= next
        })
        .collect();
    if minima.len() < k {
        // flat spectrum: fall back to the globally smallest samples
        let mut all: Vec<usize> = (0..n).filter(|i| !minima.contains(i)).collect();
        all.sort_by(|&a, &b| samples[a].1.total_cmp(&samples[b].1).then(a.cmp(&b)));
        minima.extend(all);
    }
    minima.sort_by(|&a, &b| samples[a].1.total_cmp(&samples[b].1).then(a.cmp(&b)));
    minima.truncate(k);

    Ok(minima
        .into_iter()
        .map(|i| {
            let w = samples[i].0;
            let (mut lo, mut hi) = (w - step, w + step);
            if let Some((wl, wh)) = search.window {
                lo = lo.max(wl);
                hi = hi.min(wh);
            }
            wrap_pi(golden_min(
                |x| subspace.denominator(x),
                lo,
                hi,
                search.tolerance,
            ))
        })
        .collect())
}

/// MUSIC pseudo-spectrum `1 / (a^H Un Un^H a)` at `w`, using the noise
/// subspace of the `m - k` smallest eigenvalues directly.
pub fn pseudo_spectrum(r: &CovarianceMatrix, k: usize, w: f64) -> f64 {
    let (_, vectors) = r.eigen();
    let m = r.dim();
    let mut den = 0.0;
    for c in k..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for row in 0..m {
            acc += vectors[(row, c)].conj() * Complex64::from_polar(1.0, w * row as f64);
        }
        den += acc.norm_sqr();
    }
    1.0 / den
}

fn matrix_from_view(v: ArrayView2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[[r, c]])
}

/// `Rt = (1/Nt) H_phi H_phi^H` and `Rc = (1/Nc) H_phi^T H_phi^*` for the
/// receive-transformed slice `H_phi = F_r(H)[i_phi, :, :]`.
pub fn slice_covariances(
    fr: &Array3<Complex64>,
    i_phi: usize,
) -> (CovarianceMatrix, CovarianceMatrix) {
    let slice = matrix_from_view(fr.index_axis(Axis(0), i_phi));
    let (nt, nc) = slice.shape();
    let rt = CovarianceMatrix::from_snapshots(&slice, 1.0 / nt as f64, CovarianceDomain::TxAntenna);
    let st = slice.transpose();
    let rc = CovarianceMatrix::from_snapshots(&st, 1.0 / nc as f64, CovarianceDomain::Subcarrier);
    (rt, rc)
}

/// Slice covariances of `h` at AoA bin `i_phi`.
pub fn aoa_slice_covariances(
    h: &ChannelTensor,
    i_phi: usize,
) -> (CovarianceMatrix, CovarianceMatrix) {
    slice_covariances(&super::periodogram::rx_transform(h), i_phi)
}

/// Full-domain covariance along one tensor axis, averaged over the other two.
pub fn domain_covariance(h: &ChannelTensor, domain: CovarianceDomain) -> CovarianceMatrix {
    let axis = match domain {
        CovarianceDomain::RxAntenna => 0,
        CovarianceDomain::TxAntenna => 1,
        CovarianceDomain::Subcarrier => 2,
    };
    let data = h.data();
    let m = data.len_of(Axis(axis));
    let snapshots = data.len() / m;
    let x = DMatrix::from_fn(m, snapshots, |_, _| Complex64::new(0.0, 0.0));
    let mut x = x;
    for (s, lane) in data.lanes(Axis(axis)).into_iter().enumerate() {
        for (i, v) in lane.iter().enumerate() {
            x[(i, s)] = *v;
        }
    }
    CovarianceMatrix::from_snapshots(&x, 1.0 / snapshots as f64, domain)
}

/// Steering vector `a(w)` of length `m`.
pub fn steering(m: usize, w: f64) -> Vec<Complex64> {
    (0..m)
        .map(|i| Complex64::from_polar(1.0, w * i as f64))
        .collect()
}
