//! Helpers shared by the integration tests: direct-sum transform oracles and
//! small fixtures.
#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapesense::channel::ChannelTensor;
use shapesense::scene::SystemConfig;

pub fn small_system(nr: usize, nt: usize, nc: usize) -> SystemConfig {
    SystemConfig::new(28e9, 1e9, nc, nt, nr)
}

pub fn random_tensor(sys: &SystemConfig, seed: u64) -> ChannelTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Array3::from_shape_fn((sys.num_rx, sys.num_tx, sys.num_subcarriers), |_| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    ChannelTensor::from_array(data, sys).unwrap()
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

/// Joint transform evaluated term by term: forward over receive antennas
/// and backward over transmit antennas, both centred, and backward over
/// subcarriers.
pub fn direct_full(h: &ChannelTensor) -> Array3<Complex64> {
    let d = h.data();
    let (nr, nt, nc) = d.dim();
    Array3::from_shape_fn((nr, nt, nc), |(i, j, k)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..nr {
            for t in 0..nt {
                for c in 0..nc {
                    let phase = -2.0 * PI * r as f64 * (i as f64 - nr as f64 / 2.0) / nr as f64
                        + 2.0 * PI * t as f64 * (j as f64 - nt as f64 / 2.0) / nt as f64
                        + 2.0 * PI * (c * k) as f64 / nc as f64;
                    acc += d[[r, t, c]] * cis(phase);
                }
            }
        }
        acc
    })
}

pub fn direct_3d(h: &ChannelTensor) -> Array3<f64> {
    direct_full(h).mapv(|z| z.norm_sqr())
}

pub fn direct_aoa(h: &ChannelTensor) -> Array1<f64> {
    let d = h.data();
    let (nr, nt, nc) = d.dim();
    Array1::from_shape_fn(nr, |i| {
        let mut total = 0.0;
        for t in 0..nt {
            for c in 0..nc {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..nr {
                    let phase = -2.0 * PI * r as f64 * (i as f64 - nr as f64 / 2.0) / nr as f64;
                    acc += d[[r, t, c]] * cis(phase);
                }
                total += acc.norm_sqr();
            }
        }
        total / (nt * nc) as f64
    })
}

pub fn direct_aoa_aod(h: &ChannelTensor) -> Array2<f64> {
    let d = h.data();
    let (nr, nt, nc) = d.dim();
    Array2::from_shape_fn((nr, nt), |(i, j)| {
        let mut total = 0.0;
        for c in 0..nc {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..nr {
                for t in 0..nt {
                    let phase = -2.0 * PI * r as f64 * (i as f64 - nr as f64 / 2.0) / nr as f64
                        + 2.0 * PI * t as f64 * (j as f64 - nt as f64 / 2.0) / nt as f64;
                    acc += d[[r, t, c]] * cis(phase);
                }
            }
            total += acc.norm_sqr();
        }
        total / nc as f64
    })
}

pub fn direct_aoa_delay(h: &ChannelTensor) -> Array2<f64> {
    let d = h.data();
    let (nr, nt, nc) = d.dim();
    Array2::from_shape_fn((nr, nc), |(i, k)| {
        let mut total = 0.0;
        for t in 0..nt {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..nr {
                for c in 0..nc {
                    let phase = -2.0 * PI * r as f64 * (i as f64 - nr as f64 / 2.0) / nr as f64
                        + 2.0 * PI * (c * k) as f64 / nc as f64;
                    acc += d[[r, t, c]] * cis(phase);
                }
            }
            total += acc.norm_sqr();
        }
        total / nt as f64
    })
}

/// Largest elementwise difference relative to the largest oracle value.
pub fn rel_err<'a>(
    fast: impl IntoIterator<Item = &'a f64>,
    oracle: impl IntoIterator<Item = &'a f64>,
) -> f64 {
    let fast: Vec<f64> = fast.into_iter().copied().collect();
    let oracle: Vec<f64> = oracle.into_iter().copied().collect();
    assert_eq!(fast.len(), oracle.len());
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    fast.iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}
