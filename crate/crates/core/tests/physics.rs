//! Path powers against closed-form oracles, reciprocity and facet
//! convergence.

use std::f64::consts::PI;

use proptest::prelude::*;
use shapesense::geometry::{Vec2, SPEED_OF_LIGHT};
use shapesense::raytrace::*;
use shapesense::scene::*;

const LAMBDA: f64 = 0.0107;

/// A 10 m square with its bottom edge on y = 0, and one monostatic station
/// 10 m below a facet centre of that edge.
fn bench_scene() -> (Scene, BaseStation) {
    let sys = SystemConfig::new(SPEED_OF_LIGHT / LAMBDA, 1e9, 64, 32, 32);
    let target = ConvexPolygon::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(10.0, 0.0),
        Vec2::new(10.0, 10.0),
        Vec2::new(0.0, 10.0),
    ])
    .unwrap();
    let bs = BaseStation::new(
        "bs",
        Vec2::new(5.05, -10.0),
        Vec2::new(0.0, 1.0),
        Role::Both,
    )
    .unwrap();
    let scene = validate_scene(sys, vec![bs.clone()], Some(target), Material::default()).unwrap();
    (scene, bs)
}

#[test]
fn scatter_power_matches_oracle() {
    // alpha_s^2 Pt lambda^2 / (16 pi^3 d1^2 d2^2) cos cos dS
    let oracle = 0.5 * LAMBDA * LAMBDA / (16.0 * PI * PI * PI * 1e4) * 0.1;
    assert!((oracle - 1.154e-12).abs() < 1e-15);
    let (scene, bs) = bench_scene();
    let paths =
        enumerate_scatter_paths(&scene, &bs, &bs, 0.1, ScatterPhase::Deterministic).unwrap();
    let foot = paths
        .iter()
        .find(|p| (p.point() - Vec2::new(5.05, 0.0)).norm() < 1e-9)
        .expect("facet under the station");
    let got = foot.power_gain() * scene.system().tx_power;
    assert!(((got - oracle) / oracle).abs() < 1e-12, "{got} vs {oracle}");
}

#[test]
fn reflection_power_matches_oracle() {
    let oracle = 0.5 * LAMBDA * LAMBDA / ((4.0 * PI).powi(2) * 400.0);
    assert!((oracle - 9.063e-10).abs() < 1e-12);
    let (scene, bs) = bench_scene();
    let p = find_reflection_path(&scene, &bs, &bs).unwrap().unwrap();
    assert!((p.point() - Vec2::new(5.05, 0.0)).norm() < 1e-12);
    assert!((p.tau * SPEED_OF_LIGHT - 20.0).abs() < 1e-9);
    let got = p.power_gain() * scene.system().tx_power;
    assert!(((got - oracle) / oracle).abs() < 1e-12);
}

#[test]
fn reflection_beats_any_facet_at_equal_distance() {
    let (scene, bs) = bench_scene();
    let r = find_reflection_path(&scene, &bs, &bs).unwrap().unwrap();
    let paths =
        enumerate_scatter_paths(&scene, &bs, &bs, 0.1, ScatterPhase::Deterministic).unwrap();
    assert!(paths.iter().all(|p| p.power_gain() < r.power_gain()));
}

fn desk() -> Scene {
    shapesense::config::SceneSpec::desk().build().unwrap().scene
}

#[test]
fn scattered_power_converges_under_facet_halving() {
    let scene = desk();
    let (tx, rx) = (scene.station(1), scene.station(2));
    let total = |len: f64| -> f64 {
        enumerate_scatter_paths(&scene, tx, rx, len, ScatterPhase::Deterministic)
            .unwrap()
            .iter()
            .map(|p| p.power_gain())
            .sum()
    };
    let base = default_facet_length(&scene);
    let mut prev = total(base);
    for k in 1..4 {
        let next = total(base / 2f64.powi(k));
        assert!(((next - prev) / prev).abs() < 0.05);
        prev = next;
    }
    let n1 = enumerate_scatter_paths(&scene, tx, rx, base, ScatterPhase::Deterministic)
        .unwrap()
        .len();
    let n2 = enumerate_scatter_paths(&scene, tx, rx, base / 2.0, ScatterPhase::Deterministic)
        .unwrap()
        .len();
    assert!((n2 as f64 / n1 as f64 - 2.0).abs() < 0.1);
}

#[test]
fn energy_split_enforced() {
    assert!(Material::new(0.6, 0.8).is_ok());
    assert!(matches!(
        Material::new(0.6, 0.6),
        Err(SceneError::EnergyConservationViolated(_))
    ));
}

fn assert_reciprocal(scene: &Scene, a: usize, b: usize) {
    let (s, t) = (scene.station(a), scene.station(b));
    let len = default_facet_length(scene);
    let fwd = trace_all(scene, s, t, len, ScatterPhase::Deterministic).unwrap();
    let back = trace_all(scene, t, s, len, ScatterPhase::Deterministic).unwrap();
    assert_eq!(fwd.len(), back.len());
    for (p, q) in fwd.iter().zip(&back) {
        assert_eq!(p.kind, q.kind);
        assert!((p.point() - q.point()).norm() < 1e-9);
        assert!((p.tau - q.tau).abs() <= 1e-12 * p.tau);
        assert!((p.power_gain() - q.power_gain()).abs() <= 1e-12 * p.power_gain());
        assert!((p.aoa - q.aod).abs() < 1e-12);
        assert!((p.aod - q.aoa).abs() < 1e-12);
    }
}

#[test]
fn desk_paths_are_reciprocal() {
    let scene = desk();
    for a in 0..3 {
        for b in 0..3 {
            assert_reciprocal(&scene, a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_pairs_are_reciprocal(
        ax in -20.0f64..20.0, ay in -20.0f64..-6.0,
        bx in -20.0f64..20.0, by in -20.0f64..-6.0,
    ) {
        let sys = SystemConfig::desk_scale();
        let target = ConvexPolygon::new(vec![
            Vec2::new(-3.0, -2.0), Vec2::new(3.0, -3.0), Vec2::new(4.0, 2.0), Vec2::new(-1.0, 4.0),
        ]).unwrap();
        let c = target.centroid();
        let stations = vec![
            BaseStation::facing("a", Vec2::new(ax, ay), c, Role::Both).unwrap(),
            BaseStation::facing("b", Vec2::new(bx, by), c, Role::Both).unwrap(),
        ];
        let scene = validate_scene(sys, stations, Some(target), Material::default()).unwrap();
        assert_reciprocal(&scene, 0, 1);
    }

    #[test]
    fn path_records_obey_invariants(bx in -20.0f64..20.0, by in -20.0f64..-6.0) {
        let scene = desk();
        let bs = BaseStation::facing("x", Vec2::new(bx, by), Vec2::zeros(), Role::Both).unwrap();
        for rx in scene.stations() {
            for p in trace_all(&scene, &bs, rx, 0.2, ScatterPhase::Deterministic).unwrap() {
                let pt = p.point();
                let path = (pt - bs.position).norm() + (rx.position - pt).norm();
                prop_assert!((p.tau * SPEED_OF_LIGHT - path).abs() < 1e-9);
                prop_assert!(p.aoa.abs() < PI / 2.0 && p.aod.abs() < PI / 2.0);
                prop_assert!(p.power_gain() > 0.0);
            }
        }
    }
}
