//! Cell-averaging CFAR over a circular 1-D spectrum.

use serde::{Deserialize, Serialize};

use super::EstimateError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarConfig {
    /// Training cells on each side of the cell under test.
    pub train: usize,
    /// Guard cells on each side of the cell under test.
    pub guard: usize,
    /// Design false-alarm probability.
    pub pfa: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self {
            train: 16,
            guard: 4,
            pfa: 1e-3,
        }
    }
}

impl CfarConfig {
    /// Threshold multiplier `N (Pfa^(-1/N) - 1)` over all `N = 2 * train`
    /// training cells.
    pub fn alpha(&self) -> f64 {
        let n = (2 * self.train) as f64;
        n * (self.pfa.powf(-1.0 / n) - 1.0)
    }

    pub fn window_len(&self) -> usize {
        2 * (self.train + self.guard) + 1
    }
}

/// Binary detection map over AoA bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionMap {
    hits: Vec<bool>,
}

impl DetectionMap {
    pub fn from_hits(hits: Vec<bool>) -> Self {
        Self { hits }
    }

    pub fn hits(&self) -> &[bool] {
        &self.hits
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.hits
            .iter()
            .enumerate()
            .filter_map(|(i, &h)| h.then_some(i))
    }

    pub fn count(&self) -> usize {
        self.hits.iter().filter(|&&h| h).count()
    }
}

/// Declare cell `i` a detection when it exceeds `alpha` times the mean of
/// its training cells. Indices wrap around the ends of the spectrum.
pub fn cfar_1d(spectrum: &[f64], cfg: &CfarConfig) -> Result<DetectionMap, EstimateError> {
    let n = spectrum.len();
    if cfg.train == 0 || cfg.window_len() > n {
        return Err(EstimateError::WindowTooLarge {
            window: cfg.window_len(),
            len: n,
        });
    }
    let alpha = cfg.alpha();
    let ntrain = (2 * cfg.train) as f64;
    let hits = (0..n)
        .map(|i| {
            let noise: f64 = (cfg.guard + 1..=cfg.guard + cfg.train)
                .map(|k| spectrum[(i + k) % n] + spectrum[(i + n - k) % n])
                .sum::<f64>()
                / ntrain;
            spectrum[i] > alpha * noise
        })
        .collect();
    Ok(DetectionMap { hits })
}
