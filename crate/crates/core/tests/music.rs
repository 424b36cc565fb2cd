//! MUSIC frequency estimation on synthetic covariances.

use nalgebra::DMatrix;
use num_complex::Complex64;
use shapesense::estimate::music::*;

fn rank_one_plus_noise(m: usize, omega: f64, noise: f64) -> CovarianceMatrix {
    let a = steering(m, omega);
    let r = DMatrix::from_fn(m, m, |i, j| {
        a[i] * a[j].conj()
            + if i == j {
                Complex64::new(noise, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
    });
    CovarianceMatrix::new(r, CovarianceDomain::RxAntenna)
}

#[test]
fn recovers_single_frequency() {
    let r = rank_one_plus_noise(16, 0.7, 0.01);
    let w = music_1d(&r, 1, &MusicSearch::default()).unwrap();
    assert!((w[0] - 0.7).abs() < 1e-4, "{}", w[0]);
}

#[test]
fn argmax_is_scale_invariant() {
    let r = rank_one_plus_noise(16, -1.9, 0.01);
    let base = music_1d(&r, 1, &MusicSearch::default()).unwrap()[0];
    for s in [1e-6, 1.0, 1e6] {
        let w = music_1d(&r.scaled(s), 1, &MusicSearch::default()).unwrap()[0];
        assert!((w - base).abs() < 1e-9, "scale {s}: {w} vs {base}");
    }
}

#[test]
fn frequencies_near_the_wrap_point() {
    for omega in [-3.1, 3.1, 0.0] {
        let r = rank_one_plus_noise(16, omega, 0.01);
        let w = music_1d(&r, 1, &MusicSearch::default()).unwrap()[0];
        assert!(wrap_pi(w - omega).abs() < 1e-4, "{omega}: {w}");
    }
}

#[test]
fn two_sources_resolved() {
    let (m, w1, w2) = (16, 0.4, 1.2);
    let a = steering(m, w1);
    let b = steering(m, w2);
    let r = DMatrix::from_fn(m, m, |i, j| {
        a[i] * a[j].conj() * 2.0
            + b[i] * b[j].conj()
            + if i == j {
                Complex64::new(0.01, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
    });
    let r = CovarianceMatrix::new(r, CovarianceDomain::TxAntenna);
    let mut w = music_1d(&r, 2, &MusicSearch::default()).unwrap();
    w.sort_by(f64::total_cmp);
    assert!(
        (w[0] - w1).abs() < 1e-3 && (w[1] - w2).abs() < 1e-3,
        "{w:?}"
    );
}

#[test]
fn windowed_search_stays_inside() {
    let r = rank_one_plus_noise(16, 0.7, 0.01);
    let search = MusicSearch {
        window: Some((-1.0, 0.0)),
        ..MusicSearch::default()
    };
    let w = music_1d(&r, 1, &search).unwrap()[0];
    assert!((-1.0..=0.0).contains(&w));
}

#[test]
fn invalid_orders_rejected() {
    let r = rank_one_plus_noise(8, 0.7, 0.01);
    assert!(music_1d(&r, 0, &MusicSearch::default()).is_err());
    assert!(music_1d(&r, 8, &MusicSearch::default()).is_err());
    let zero = CovarianceMatrix::new(DMatrix::zeros(8, 8), CovarianceDomain::RxAntenna);
    assert!(music_1d(&zero, 1, &MusicSearch::default()).is_err());
}
