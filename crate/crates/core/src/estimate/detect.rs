//! End-to-end detection of scattering and reflection paths in one channel
//! tensor.
//!
//! Periodogram and CFAR steps run on the Hamming-windowed tensor. Covariance
//! and MUSIC steps run on the raw tensor, except that AoA slices may use a
//! receive-axis-only taper to keep a strong path from leaking into
//! neighbouring AoA bins.

use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cfar::{cfar_1d, CfarConfig};
use super::music::{
    domain_covariance, music_1d, slice_covariances, steering, CovarianceDomain, CovarianceMatrix,
    MusicSearch,
};
use super::periodogram::{
    aoa_aod_periodogram, aoa_delay_periodogram, aoa_periodogram, periodogram_3d, rowwise_peak,
    rx_transform,
};
use super::{
    bin_omega, bin_to_angle, bin_to_delay, rx_omega_to_angle, subcarrier_omega_to_delay,
    tx_omega_to_angle, EstimateError, EstimationMethod, PathEstimate, SensingMode,
};
use crate::channel::{apply_rx_window, apply_window, ChannelTensor};
use crate::raytrace::PathKind;

/// Rule deciding whether the strongest 3-D periodogram cell is a specular
/// reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionGate {
    /// Peak must exceed this multiple of the periodogram median.
    pub floor: f64,
    /// Peak must exceed this multiple of the strongest cell outside its
    /// neighbourhood.
    pub dominance: f64,
    /// Neighbourhood half-width in bins, per axis.
    pub exclusion: usize,
}

impl Default for ReflectionGate {
    fn default() -> Self {
        Self {
            floor: 1e3,
            dominance: 10.0,
            exclusion: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub cfar: CfarConfig,
    /// Coarse MUSIC grid size over `[-pi, pi)`.
    pub music_grid: usize,
    /// Refine the AoA of each CFAR hit with MUSIC (MUSIC method only).
    pub refine_aoa: bool,
    /// Half-width, in bins, of the beam-space neighbourhood used for AoA refinement.
    pub aoa_neighborhood: usize,
    /// Taper the receive axis before forming AoA slices.
    pub taper_slices: bool,
    pub reflection: ReflectionGate,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            cfar: CfarConfig::default(),
            music_grid: 4096,
            refine_aoa: true,
            aoa_neighborhood: 2,
            taper_slices: true,
            reflection: ReflectionGate::default(),
        }
    }
}

impl DetectorConfig {
    /// Settings for 32-element arrays, where the default CFAR window does not
    /// fit. Wide guard bands keep an extended target's own bins out of the
    /// noise estimate.
    pub fn desk_scale() -> Self {
        Self {
            cfar: CfarConfig {
                train: 3,
                guard: 12,
                pfa: 1e-3,
            },
            ..Self::default()
        }
    }
}

struct MusicContext {
    slices: Array3<Complex64>,
    refine_aoa: bool,
}

/// Scattering paths: one estimate per CFAR hit on the AoA spectrum, with AoD
/// (bistatic) or delay (monostatic) from the per-row peak or from MUSIC.
pub fn detect_scatter_points(
    h: &ChannelTensor,
    mode: SensingMode,
    method: EstimationMethod,
    cfg: &DetectorConfig,
) -> Result<Vec<PathEstimate>, EstimateError> {
    let sys = *h.system();
    let windowed = apply_window(h);
    let w = windowed.tensor();
    let spectrum = aoa_periodogram(w).into_values().to_vec();
    let rows: Vec<usize> = cfar_1d(&spectrum, &cfg.cfar)?.indices().collect();
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let second = match mode {
        SensingMode::DualBs => aoa_aod_periodogram(w),
        SensingMode::SingleBs => aoa_delay_periodogram(w),
    };
    let peaks = rowwise_peak(&second, rows);

    let ctx = (method == EstimationMethod::Music).then(|| MusicContext {
        slices: if cfg.taper_slices {
            rx_transform(&apply_rx_window(h))
        } else {
            rx_transform(h)
        },
        refine_aoa: cfg.refine_aoa,
    });
    let search = MusicSearch::with_grid(cfg.music_grid);

    let mut out = Vec::with_capacity(peaks.len());
    for (i_phi, j) in peaks {
        let mut est = PathEstimate {
            kind: PathKind::Scatter,
            aoa: bin_to_angle(i_phi as f64, sys.num_rx, &sys)?,
            aod: None,
            tau: None,
            method,
            aoa_bin: i_phi,
            rank_deficient: false,
        };
        match mode {
            SensingMode::DualBs => est.aod = Some(bin_to_angle(j as f64, sys.num_tx, &sys)?),
            SensingMode::SingleBs => est.tau = Some(bin_to_delay(j as f64, &sys)),
        }
        if let Some(ctx) = &ctx {
            let (rt, rc) = slice_covariances(&ctx.slices, i_phi);
            let r = match mode {
                SensingMode::DualBs => rt,
                SensingMode::SingleBs => rc,
            };
            match music_1d(&r, 1, &search) {
                Ok(omega) => match mode {
                    SensingMode::DualBs => est.aod = Some(tx_omega_to_angle(omega[0], &sys)),
                    SensingMode::SingleBs => {
                        est.tau = Some(subcarrier_omega_to_delay(omega[0], &sys))
                    }
                },
                Err(EstimateError::RankDeficient { .. }) => est.rank_deficient = true,
                Err(e) => return Err(e),
            }
            if ctx.refine_aoa {
                let rr = conditioned_rx_covariance(h, mode, &est);
                match refine_aoa(&rr, i_phi, cfg.aoa_neighborhood, &search) {
                    Ok(omega) => est.aoa = rx_omega_to_angle(omega, &sys),
                    Err(EstimateError::RankDeficient { .. }) => est.rank_deficient = true,
                    Err(e) => return Err(e),
                }
            }
        }
        out.push(est);
    }
    Ok(out)
}

/// Receive covariance of the tensor beamformed toward the estimate's AoD
/// (bistatic) or delay (monostatic) with a Hamming taper, so that only paths
/// sharing that second parameter contribute.
pub fn conditioned_rx_covariance(
    h: &ChannelTensor,
    mode: SensingMode,
    est: &PathEstimate,
) -> CovarianceMatrix {
    let sys = h.system();
    let data = h.data();
    let (nr, nt, nc) = data.dim();
    let two_pi = 2.0 * std::f64::consts::PI;
    let (weights, snapshots): (Vec<Complex64>, usize) = match mode {
        SensingMode::DualBs => {
            let s = sys.spacing_ratio() * est.aod.unwrap_or(0.0).sin();
            let taper = crate::channel::hamming(nt);
            let w = (0..nt)
                .map(|t| Complex64::from_polar(taper[t], two_pi * t as f64 * s))
                .collect();
            (w, nc)
        }
        SensingMode::SingleBs => {
            let x = sys.subcarrier_spacing() * est.tau.unwrap_or(0.0);
            let taper = crate::channel::hamming(nc);
            let w = (0..nc)
                .map(|c| Complex64::from_polar(taper[c], two_pi * c as f64 * x))
                .collect();
            (w, nt)
        }
    };
    let mut x = nalgebra::DMatrix::<Complex64>::zeros(nr, snapshots);
    for r in 0..nr {
        for t in 0..nt {
            for c in 0..nc {
                let v = data[[r, t, c]];
                match mode {
                    SensingMode::DualBs => x[(r, c)] += weights[t] * v,
                    SensingMode::SingleBs => x[(r, t)] += weights[c] * v,
                }
            }
        }
    }
    CovarianceMatrix::from_snapshots(&x, 1.0 / snapshots as f64, CovarianceDomain::RxAntenna)
}

/// MUSIC on the receive covariance projected onto the DFT beams within
/// `half_width` bins of `bin`, searched over the same span.
pub fn refine_aoa(
    rx_cov: &CovarianceMatrix,
    bin: usize,
    half_width: usize,
    search: &MusicSearch,
) -> Result<f64, EstimateError> {
    let m = rx_cov.dim();
    let hw = half_width.min((m - 1) / 2) as f64;
    let center = bin as f64;
    let beams: Vec<Vec<Complex64>> = (-(hw as i64)..=hw as i64)
        .map(|k| steering(m, bin_omega(center + k as f64, m)))
        .collect();
    let inv_m = Complex64::new(1.0 / m as f64, 0.0);
    let projector = nalgebra::DMatrix::from_fn(m, m, |r, c| {
        beams.iter().map(|b| b[r] * b[c].conj()).sum::<Complex64>() * inv_m
    });
    let projected = CovarianceMatrix::new(
        &projector * rx_cov.data() * &projector,
        CovarianceDomain::RxAntenna,
    );
    let local = MusicSearch {
        window: Some((bin_omega(center - hw, m), bin_omega(center + hw, m))),
        ..*search
    };
    Ok(music_1d(&projected, 1, &local)?[0])
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// The specular reflection, if the 3-D periodogram has a dominant isolated
/// peak. Its AoA, AoD and delay come from MUSIC on the full-domain
/// covariances, searched around the peak.
pub fn detect_reflection(
    h: &ChannelTensor,
    cfg: &DetectorConfig,
) -> Result<Option<PathEstimate>, EstimateError> {
    let sys = *h.system();
    let windowed = apply_window(h);
    let s3 = periodogram_3d(windowed.tensor());
    let Some((pr, pt, pc)) = s3.argmax() else {
        return Ok(None);
    };
    let values = s3.values();
    let peak = values[[pr, pt, pc]];
    if !(peak > 0.0) {
        return Ok(None);
    }
    let gate = &cfg.reflection;
    let mut sorted: Vec<f64> = values.iter().copied().collect();
    let mid = sorted.len() / 2;
    let median = *sorted.select_nth_unstable_by(mid, f64::total_cmp).1;
    if peak <= gate.floor * median {
        return Ok(None);
    }
    let (nr, nt, nc) = values.dim();
    let ex = gate.exclusion;
    let runner_up = values
        .indexed_iter()
        .filter(|((r, t, c), _)| {
            circular_distance(*r, pr, nr) > ex
                || circular_distance(*t, pt, nt) > ex
                || circular_distance(*c, pc, nc) > ex
        })
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    if peak <= gate.dominance * runner_up {
        return Ok(None);
    }

    let mut est = PathEstimate {
        kind: PathKind::Reflect,
        aoa: bin_to_angle(pr as f64, nr, &sys)?,
        aod: Some(bin_to_angle(pt as f64, nt, &sys)?),
        tau: Some(bin_to_delay(pc as f64, &sys)),
        method: EstimationMethod::Music,
        aoa_bin: pr,
        rank_deficient: false,
    };
    let search = MusicSearch::with_grid(cfg.music_grid);
    let hw = ex as f64;
    let window = |center: f64, n: usize, scale: f64| {
        let (a, b) = (
            scale * bin_omega(center - hw, n),
            scale * bin_omega(center + hw, n),
        );
        Some((a.min(b), a.max(b)))
    };
    let rx = MusicSearch {
        window: window(pr as f64, nr, 1.0),
        ..search
    };
    let tx = MusicSearch {
        window: window(pt as f64, nt, -1.0),
        ..search
    };
    // delay bin j sits at omega = -2 pi j / Nc
    let sc = MusicSearch {
        window: window(pc as f64 + nc as f64 / 2.0, nc, -1.0),
        ..search
    };
    let r_r = domain_covariance(h, CovarianceDomain::RxAntenna);
    let r_t = domain_covariance(h, CovarianceDomain::TxAntenna);
    let r_c = domain_covariance(h, CovarianceDomain::Subcarrier);
    let results = [
        music_1d(&r_r, 1, &rx),
        music_1d(&r_t, 1, &tx),
        music_1d(&r_c, 1, &sc),
    ];
    for (slot, res) in results.into_iter().enumerate() {
        match res {
            Ok(omega) => match slot {
                0 => est.aoa = rx_omega_to_angle(omega[0], &sys),
                1 => est.aod = Some(tx_omega_to_angle(omega[0], &sys)),
                _ => est.tau = Some(subcarrier_omega_to_delay(omega[0], &sys)),
            },
            Err(EstimateError::RankDeficient { .. }) => est.rank_deficient = true,
            Err(e) => return Err(e),
        }
    }
    Ok(Some(est))
}
