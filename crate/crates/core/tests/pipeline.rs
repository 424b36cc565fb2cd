//! End-to-end runs of the desk experiment.

use shapesense::channel::NOISELESS;
use shapesense::config::SceneSpec;
use shapesense::experiment::*;
use shapesense::geometry::SPEED_OF_LIGHT;
use shapesense::metrics::TrialResult;

fn small(snr: Vec<f64>, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        snr_db: snr,
        trials,
        seed: 7,
        ..ExperimentConfig::default()
    }
}

fn results_csv(results: &[TrialResult]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_results_csv(&summarize(results), &mut buf).unwrap();
    buf
}

/// Everything but the wall-clock runtime.
fn strip_runtime(mut results: Vec<TrialResult>) -> Vec<TrialResult> {
    for r in results.iter_mut() {
        r.runtime = 0.0;
    }
    results
}

#[test]
fn same_seed_same_bytes() {
    let cfg = small(vec![10.0, 20.0], 3);
    let a = Experiment::from_config(cfg.clone())
        .unwrap()
        .run_sweep(None)
        .unwrap();
    let b = Experiment::from_config(cfg.clone())
        .unwrap()
        .run_sweep(None)
        .unwrap();
    assert_eq!(results_csv(&a), results_csv(&b));
    let other = Experiment::from_config(ExperimentConfig { seed: 8, ..cfg })
        .unwrap()
        .run_sweep(None)
        .unwrap();
    assert_ne!(strip_runtime(a), strip_runtime(other));
}

#[test]
fn noiseless_music_points_within_a_range_bin() {
    let cfg = ExperimentConfig {
        methods: vec![Method::PerMusicSpd],
        ..small(vec![NOISELESS], 1)
    };
    let results = Experiment::from_config(cfg)
        .unwrap()
        .run_sweep(None)
        .unwrap();
    let bin = SPEED_OF_LIGHT / (2.0 * 1e9);
    let mse = results[0].mse.expect("points detected");
    assert!(mse < bin * bin, "mse {mse}");
}

#[test]
fn empty_scene_detects_nothing() {
    let mut spec = SceneSpec::desk();
    spec.target = None;
    let exp = Experiment::new(small(vec![20.0], 2), &spec).unwrap();
    for r in exp.run_sweep(None).unwrap() {
        assert_eq!(r.num_points, 0);
        assert_eq!(r.num_edges, 0);
        assert!(r.mse.is_none() && !r.closed);
        assert!(r.failure.is_some());
    }
}

#[test]
fn checkpoint_resumes_without_recomputing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.jsonl");
    let exp = Experiment::from_config(small(vec![15.0], 4)).unwrap();
    let full = exp.run_sweep(Some(&path)).unwrap();

    // keep the header and the first trial's lines, then cut one line short
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let methods = exp.config().methods.len();
    let mut kept = lines[..1 + methods].join("\n");
    kept.push('\n');
    kept.push_str(&lines[1 + methods][..10]);
    kept.push('\n');
    std::fs::write(&path, kept).unwrap();

    let resumed = exp.run_sweep(Some(&path)).unwrap();
    assert_eq!(strip_runtime(resumed), strip_runtime(full.clone()));
    // a third run finds every trial done
    let again = exp.run_sweep(Some(&path)).unwrap();
    assert_eq!(again.len(), full.len());
}

#[test]
fn checkpoint_from_other_config_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.jsonl");
    Experiment::from_config(small(vec![15.0], 1))
        .unwrap()
        .run_sweep(Some(&path))
        .unwrap();
    let other = Experiment::from_config(small(vec![15.0], 2)).unwrap();
    assert!(other.run_sweep(Some(&path)).is_err());
}

#[test]
fn dump_writes_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let exp = Experiment::from_config(small(vec![20.0], 1)).unwrap();
    let stages = [
        DumpStage::Paths,
        DumpStage::Tensor,
        DumpStage::Periodogram,
        DumpStage::Points,
        DumpStage::Shape,
    ];
    exp.dump_trial(0, 0, &stages, dir.path()).unwrap();
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    let views = exp.views().len();
    for suffix in ["_paths.csv", "_tensor.bin", "_aoa.csv", "_2d.csv"] {
        assert_eq!(
            names.iter().filter(|n| n.ends_with(suffix)).count(),
            views,
            "{suffix}"
        );
    }
    for suffix in ["_points.csv", "_shape.csv"] {
        assert_eq!(
            names.iter().filter(|n| n.ends_with(suffix)).count(),
            3,
            "{suffix}"
        );
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scene.toml"), SceneSpec::desk().to_toml()).unwrap();
    let file = dir.path().join("experiment.toml");
    std::fs::write(
        &file,
        "scene = \"scene.toml\"\nsnr_db = [10.0]\ntrials = 2\nmethods = [\"refined\"]\n",
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&file).unwrap();
    assert_eq!(
        cfg.scene.as_deref(),
        Some(dir.path().join("scene.toml").as_path())
    );
    assert_eq!(cfg.methods, vec![Method::Refined]);
    assert_eq!(
        Experiment::from_config(cfg)
            .unwrap()
            .run_sweep(None)
            .unwrap()
            .len(),
        2
    );
}
