//! Path parameter estimation from a channel tensor: periodograms, CA-CFAR
//! over the AoA spectrum, per-row peak search and MUSIC refinement.

pub mod cfar;
pub mod detect;
pub mod music;
pub mod periodogram;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raytrace::PathKind;
use crate::scene::SystemConfig;

pub use cfar::{cfar_1d, CfarConfig, DetectionMap};
pub use detect::{detect_reflection, detect_scatter_points, DetectorConfig, ReflectionGate};
pub use music::{music_1d, CovarianceDomain, CovarianceMatrix, MusicSearch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("CFAR window of {window} cells does not fit a spectrum of {len} bins")]
    WindowTooLarge { window: usize, len: usize },
    #[error("bin {index} maps outside the visible angle range")]
    IndexOutOfVisibleRange { index: f64 },
    #[error("covariance has {found} significant eigenvalues, {needed} required")]
    RankDeficient { found: usize, needed: usize },
    #[error("model order {k} must be in 1..{m}")]
    InvalidModelOrder { k: usize, m: usize },
}

/// Monostatic (one station transmits and receives) or bistatic sensing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingMode {
    SingleBs,
    DualBs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    Periodogram,
    Music,
}

/// Estimated parameters of one detected path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEstimate {
    pub kind: PathKind,
    /// rad from receive boresight.
    pub aoa: f64,
    /// rad from transmit boresight; bistatic scatter and all reflections.
    pub aod: Option<f64>,
    /// s, in `[0, Nc/B)`; monostatic scatter and all reflections.
    pub tau: Option<f64>,
    pub method: EstimationMethod,
    /// The CFAR bin this estimate came from (reflections: the 3-D peak row).
    pub aoa_bin: usize,
    /// MUSIC found no usable signal subspace and the periodogram value was kept.
    pub rank_deficient: bool,
}

/// Angle for a (possibly fractional) antenna-domain bin index.
pub fn bin_to_angle(index: f64, n: usize, system: &SystemConfig) -> Result<f64, EstimateError> {
    let s = (index / n as f64 - 0.5) / system.spacing_ratio();
    if !(-1.0..=1.0).contains(&s) {
        return Err(EstimateError::IndexOutOfVisibleRange { index });
    }
    Ok(s.asin())
}

/// Delay for a (possibly fractional) subcarrier-domain bin index.
pub fn bin_to_delay(index: f64, system: &SystemConfig) -> f64 {
    index / system.bandwidth
}

/// `(aoa, aod, tau)` for a bin of the joint 3-D periodogram.
pub fn index_to_params(
    i_aoa: usize,
    i_aod: usize,
    i_tau: usize,
    system: &SystemConfig,
) -> Result<(f64, f64, f64), EstimateError> {
    Ok((
        bin_to_angle(i_aoa as f64, system.num_rx, system)?,
        bin_to_angle(i_aod as f64, system.num_tx, system)?,
        bin_to_delay(i_tau as f64, system),
    ))
}

/// Spatial frequency of the receive steering vector for bin `i` of `n`.
pub(crate) fn bin_omega(i: f64, n: usize) -> f64 {
    2.0 * PI * (i / n as f64 - 0.5)
}

/// AoA from a receive-domain MUSIC frequency.
pub fn rx_omega_to_angle(omega: f64, system: &SystemConfig) -> f64 {
    (omega / (2.0 * PI * system.spacing_ratio()))
        .clamp(-1.0, 1.0)
        .asin()
}

/// AoD from a transmit-domain MUSIC frequency.
pub fn tx_omega_to_angle(omega: f64, system: &SystemConfig) -> f64 {
    (-omega / (2.0 * PI * system.spacing_ratio()))
        .clamp(-1.0, 1.0)
        .asin()
}

/// Delay from a subcarrier-domain MUSIC frequency, wrapped into `[0, Nc/B)`.
pub fn subcarrier_omega_to_delay(omega: f64, system: &SystemConfig) -> f64 {
    let period = system.max_delay();
    let tau = -omega / (2.0 * PI * system.subcarrier_spacing());
    let wrapped = tau.rem_euclid(period);
    if wrapped >= period {
        0.0
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> SystemConfig {
        SystemConfig::new(28e9, 1e9, 64, 32, 32)
    }

    #[test]
    fn center_bin_is_boresight() {
        assert_eq!(bin_to_angle(16.0, 32, &sys()).unwrap(), 0.0);
    }

    #[test]
    fn three_quarter_bin_is_thirty_degrees() {
        let a = bin_to_angle(24.0, 32, &sys()).unwrap();
        assert!((a.to_degrees() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn zero_delay_bin() {
        assert_eq!(bin_to_delay(0.0, &sys()), 0.0);
    }

    #[test]
    fn invisible_bins_rejected_for_dense_spacing() {
        let mut s = sys();
        s.element_spacing = s.wavelength() / 4.0;
        assert!(matches!(
            bin_to_angle(0.0, 32, &s),
            Err(EstimateError::IndexOutOfVisibleRange { .. })
        ));
    }

    #[test]
    fn omega_maps_invert() {
        let s = sys();
        let phi: f64 = 0.3;
        let w = 2.0 * PI * s.spacing_ratio() * phi.sin();
        assert!((rx_omega_to_angle(w, &s) - phi).abs() < 1e-12);
        assert!((tx_omega_to_angle(-w, &s) - phi).abs() < 1e-12);
        let tau = 10e-9;
        let wc = music::wrap_pi(-2.0 * PI * s.subcarrier_spacing() * tau);
        assert!((subcarrier_omega_to_delay(wc, &s) - tau).abs() < 1e-18);
    }
}
