//! CA-CFAR calibration on exponential noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapesense::estimate::cfar::{cfar_1d, CfarConfig};

/// Squared magnitude of unit-power complex Gaussian noise.
fn noise_cells(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect()
}

#[test]
fn false_alarm_rate_is_calibrated() {
    let cfg = CfarConfig::default();
    let cells = noise_cells(10_000, 11);
    let rate = cfar_1d(&cells, &cfg).unwrap().count() as f64 / cells.len() as f64;
    assert!((2e-4..=5e-3).contains(&rate), "empirical Pfa {rate}");
}

#[test]
fn desk_window_is_calibrated_too() {
    let cfg = shapesense::estimate::detect::DetectorConfig::desk_scale().cfar;
    let mut hits = 0;
    let mut total = 0;
    for seed in 0..40 {
        let cells = noise_cells(256, seed);
        hits += cfar_1d(&cells, &cfg).unwrap().count();
        total += cells.len();
    }
    let rate = hits as f64 / total as f64;
    assert!((2e-4..=5e-3).contains(&rate), "empirical Pfa {rate}");
}

#[test]
fn strong_cell_always_detected() {
    let cfg = CfarConfig::default();
    for seed in 0..200 {
        let mut cells = vec![1.0; 128];
        let noisy = noise_cells(128, seed);
        let mean = noisy.iter().sum::<f64>() / 128.0;
        cells.copy_from_slice(&noisy);
        let at = (seed as usize * 37) % 128;
        cells[at] = 100.0 * mean;
        let hits = cfar_1d(&cells, &cfg).unwrap();
        assert!(hits.hits()[at], "seed {seed}");
    }
}

#[test]
fn threshold_is_scale_invariant() {
    let cfg = CfarConfig::default();
    let cells = noise_cells(2048, 3);
    let base = cfar_1d(&cells, &cfg).unwrap();
    for scale in [1e-9, 1e9] {
        let scaled: Vec<f64> = cells.iter().map(|v| v * scale).collect();
        assert_eq!(cfar_1d(&scaled, &cfg).unwrap(), base);
    }
}

#[test]
fn oversized_window_rejected() {
    assert!(cfar_1d(&[1.0; 32], &CfarConfig::default()).is_err());
}
