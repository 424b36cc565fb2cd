//! Monte-Carlo experiments. A trial adds noise to every view of the scene,
//! detects and localizes points, reconstructs the shape and scores it; a
//! sweep repeats trials over SNRs and methods.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{add_noise, apply_window, synthesize, write_tensor, ChannelTensor};
use crate::config::{ConfigError, RaytraceSpec, SceneSpec};
use crate::estimate::periodogram::{
    aoa_aod_periodogram, aoa_delay_periodogram, aoa_periodogram, write_periodogram_csv,
};
use crate::estimate::{
    detect_reflection, detect_scatter_points, DetectorConfig, EstimationMethod, SensingMode,
};
use crate::geometry::Vec2;
use crate::localize::{
    localize_scatter, reflection_surface, write_points_csv, DetectedPoint, PointSource,
};
use crate::metrics::{close_rate, direction_error, is_closed, mean_std, point_mse, TrialResult};
use crate::raytrace::{
    default_facet_length, trace_all, write_paths_csv, PathKind, PathRecord, ScatterPhase,
};
use crate::reconstruct::{
    close_polygon, ht_pca_tsr, refine_with_reflection, write_shape_csv, ReconstructionParams,
    RefineEvent, ShapeEstimate,
};
use crate::scene::{Scene, SystemConfig};
use crate::Error;

/// Processing chain compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Periodogram peaks only.
    PerSpd,
    /// Periodogram peaks refined with MUSIC.
    PerMusicSpd,
    /// MUSIC points plus shape refinement with detected reflections.
    Refined,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::PerSpd, Method::PerMusicSpd, Method::Refined];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::PerSpd => "per-spd",
            Method::PerMusicSpd => "per-music-spd",
            Method::Refined => "refined",
        }
    }

    pub fn estimation(self) -> EstimationMethod {
        match self {
            Method::PerSpd => EstimationMethod::Periodogram,
            Method::PerMusicSpd | Method::Refined => EstimationMethod::Music,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                format!("unknown method `{s}` (expected per-spd, per-music-spd or refined)")
            })
    }
}

/// Intermediate results that can be written out for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DumpStage {
    Paths,
    Tensor,
    Periodogram,
    Points,
    Shape,
}

impl FromStr for DumpStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paths" => Ok(DumpStage::Paths),
            "tensor" => Ok(DumpStage::Tensor),
            "periodogram" => Ok(DumpStage::Periodogram),
            "points" => Ok(DumpStage::Points),
            "shape" => Ok(DumpStage::Shape),
            _ => Err(format!(
                "unknown dump stage `{s}` (expected paths, tensor, periodogram, points or shape)"
            )),
        }
    }
}

/// Reconstruction settings for the sparse point clouds of the desk scene,
/// where an edge yields roughly 5 to 15 points.
pub fn desk_reconstruction() -> ReconstructionParams {
    ReconstructionParams {
        min_points: 5,
        ..ReconstructionParams::default()
    }
}

/// Everything a sweep needs besides the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scene file, relative to the experiment file; the desk scene when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<PathBuf>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Replace the scene's system with 128x128 antennas and 256 subcarriers.
    pub paper_scale: bool,
    /// Target edges whose scattering paths are removed before synthesis.
    pub suppress_edges: Vec<usize>,
    pub detector: DetectorConfig,
    pub reconstruction: ReconstructionParams,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: None,
            snr_db: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            trials: 50,
            methods: Method::ALL.to_vec(),
            seed: 0,
            paper_scale: false,
            suppress_edges: Vec::new(),
            detector: DetectorConfig::desk_scale(),
            reconstruction: desk_reconstruction(),
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Read an experiment file; a relative `scene` path is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text)?;
        if let (Some(scene), Some(dir)) = (&cfg.scene, path.parent()) {
            if scene.is_relative() {
                cfg.scene = Some(dir.join(scene));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return bad("SNR list is empty".into());
        }
        if let Some(s) = self
            .snr_db
            .iter()
            .find(|s| s.is_nan() || **s == f64::NEG_INFINITY)
        {
            return bad(format!("SNR {s} dB is not usable"));
        }
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        let cfar = &self.detector.cfar;
        if !(cfar.pfa > 0.0 && cfar.pfa < 1.0) || cfar.train == 0 {
            return bad("CFAR needs training cells and 0 < pfa < 1".into());
        }
        if self.detector.music_grid < 16 {
            return bad("MUSIC grid must have at least 16 points".into());
        }
        self.reconstruction
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    fn scene_spec(&self) -> Result<SceneSpec, ConfigError> {
        match &self.scene {
            Some(path) => SceneSpec::load(path),
            None => Ok(SceneSpec::desk()),
        }
    }
}

/// One ordered (transmitter, receiver) pair with a non-empty channel.
#[derive(Debug, Clone)]
pub struct View {
    pub tx: usize,
    pub rx: usize,
    pub mode: SensingMode,
    /// Noiseless paths after edge suppression.
    pub paths: Vec<PathRecord>,
    /// Noiseless channel; absent when scatter phases are redrawn per trial.
    clean: Option<ChannelTensor>,
}

/// Everything one method produced in one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub result: TrialResult,
    pub points: Vec<DetectedPoint>,
    /// Reflections after merging repeats seen from several views.
    pub reflections: Vec<DetectedPoint>,
    /// Shape before any reflection was applied.
    pub unrefined: ShapeEstimate,
    pub shape: ShapeEstimate,
    pub events: Vec<RefineEvent>,
}

/// A prepared experiment: validated config, scene and cached views.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    scene: Scene,
    raytrace: RaytraceSpec,
    views: Vec<View>,
}

/// Seed for stream `stream` of the generator seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

const PHASE_STREAM: u64 = u64::MAX;

impl Experiment {
    /// Load the scene named by the config (or the desk scene) and prepare it.
    pub fn from_config(config: ExperimentConfig) -> Result<Self, Error> {
        let spec = config.scene_spec()?;
        Self::new(config, &spec)
    }

    pub fn new(config: ExperimentConfig, spec: &SceneSpec) -> Result<Self, Error> {
        config.validate()?;
        let setup = spec.build()?;
        let mut scene = setup.scene;
        if config.paper_scale {
            scene = scene.with_system(SystemConfig::paper_scale())?;
        }
        let sys = *scene.system();
        if config.detector.cfar.window_len() > sys.num_rx {
            return Err(ConfigError::Invalid(format!(
                "CFAR window of {} cells does not fit {} receive antennas",
                config.detector.cfar.window_len(),
                sys.num_rx
            ))
            .into());
        }
        if let Some(target) = scene.target() {
            if let Some(&e) = config
                .suppress_edges
                .iter()
                .find(|&&e| e >= target.num_edges())
            {
                return Err(ConfigError::Invalid(format!(
                    "cannot suppress edge {e}, target has {} edges",
                    target.num_edges()
                ))
                .into());
            }
        }
        let mut exp = Self {
            config,
            scene,
            raytrace: setup.raytrace,
            views: Vec::new(),
        };
        exp.views = exp.trace_views(ScatterPhase::Deterministic)?;
        if exp.raytrace.random_scatter_phase {
            for v in exp.views.iter_mut() {
                v.clean = None;
            }
        }
        Ok(exp)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    fn facet_length(&self) -> f64 {
        self.raytrace
            .facet_length
            .unwrap_or_else(|| default_facet_length(&self.scene))
    }

    /// Every ordered station pair whose channel carries any path.
    fn trace_views(&self, phase: ScatterPhase) -> Result<Vec<View>, Error> {
        let sys = self.scene.system();
        let suppressed: BTreeSet<usize> = self.config.suppress_edges.iter().copied().collect();
        let mut views = Vec::new();
        for (i, tx) in self.scene.stations().iter().enumerate() {
            if !tx.role.transmits() {
                continue;
            }
            for (j, rx) in self.scene.stations().iter().enumerate() {
                if !rx.role.receives() {
                    continue;
                }
                let mut paths = trace_all(&self.scene, tx, rx, self.facet_length(), phase)?;
                paths.retain(|p| !(p.kind == PathKind::Scatter && suppressed.contains(&p.edge())));
                let h = synthesize(&paths, sys);
                if h.mean_power() == 0.0 {
                    continue;
                }
                views.push(View {
                    tx: i,
                    rx: j,
                    mode: if i == j {
                        SensingMode::SingleBs
                    } else {
                        SensingMode::DualBs
                    },
                    paths,
                    clean: Some(h),
                });
            }
        }
        Ok(views)
    }

    /// Seed shared by every method of trial `trial` at SNR index `snr_index`.
    pub fn trial_seed(&self, snr_index: usize, trial: usize) -> u64 {
        derive_seed(self.config.seed, ((snr_index as u64) << 32) | trial as u64)
    }

    /// Views and their noisy channels for one trial, in view order.
    pub fn noisy_views(
        &self,
        snr_db: f64,
        trial_seed: u64,
    ) -> Result<Vec<(View, ChannelTensor)>, Error> {
        let views = if self.raytrace.random_scatter_phase {
            let phase = ScatterPhase::Random(derive_seed(trial_seed, PHASE_STREAM));
            self.trace_views(phase)?
        } else {
            self.views.clone()
        };
        views
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                let clean = v
                    .clean
                    .clone()
                    .expect("views traced for this trial carry channels");
                let h = add_noise(&clean, snr_db, derive_seed(trial_seed, k as u64))?;
                Ok((v, h))
            })
            .collect()
    }

    fn scatter_points(
        &self,
        noisy: &[(View, ChannelTensor)],
        method: EstimationMethod,
    ) -> Result<Vec<DetectedPoint>, Error> {
        let mut points = Vec::new();
        for (v, h) in noisy {
            let (tx, rx) = (self.scene.station(v.tx), self.scene.station(v.rx));
            for est in detect_scatter_points(h, v.mode, method, &self.config.detector)? {
                // rays that miss each other yield no point
                if let Ok(p) = localize_scatter(&est, v.mode, tx, rx) {
                    points.push(DetectedPoint::scatter(p).with_source(PointSource {
                        tx: v.tx,
                        rx: v.rx,
                        method,
                    }));
                }
            }
        }
        Ok(points)
    }

    /// Consistent reflections from every view, with repeats of one surface
    /// (nearby positions) averaged.
    fn reflections(&self, noisy: &[(View, ChannelTensor)]) -> Result<Vec<DetectedPoint>, Error> {
        let sys = self.scene.system();
        let mut found = Vec::new();
        for (v, h) in noisy {
            let (tx, rx) = (self.scene.station(v.tx), self.scene.station(v.rx));
            let Some(est) = detect_reflection(h, &self.config.detector)? else {
                continue;
            };
            if let Ok(p) = reflection_surface(&est, v.mode, tx, rx, sys) {
                if p.consistent {
                    found.push(p.with_source(PointSource {
                        tx: v.tx,
                        rx: v.rx,
                        method: EstimationMethod::Music,
                    }));
                }
            }
        }
        Ok(merge_reflections(
            found,
            3.0 * self.config.reconstruction.delta_rho,
        ))
    }

    fn score(
        &self,
        snr_db: f64,
        method: Method,
        trial: usize,
        points: &[DetectedPoint],
        shape: &ShapeEstimate,
        runtime: f64,
    ) -> TrialResult {
        let positions: Vec<Vec2> = points.iter().map(|p| p.position).collect();
        let radius = 3.0 * self.config.reconstruction.delta_rho;
        let target = self.scene.target();
        TrialResult {
            snr_db,
            method: method.as_str().to_string(),
            trial,
            mse: target.and_then(|t| point_mse(&positions, t).ok()),
            direction_error: target.and_then(|t| direction_error(shape, t, radius).ok()),
            closed: target.is_some_and(|t| is_closed(shape, t)),
            num_points: points.len(),
            num_edges: shape.num_edges(),
            failure: points
                .is_empty()
                .then(|| "no scattering points detected".to_string()),
            runtime,
        }
    }

    /// Run every configured method on one trial. Methods share the noise
    /// realisation; MUSIC detection is shared by the MUSIC-based methods.
    pub fn run_trial(&self, snr_index: usize, trial: usize) -> Result<Vec<TrialOutcome>, Error> {
        let snr_db = self.config.snr_db[snr_index];
        let seed = self.trial_seed(snr_index, trial);
        let noisy = self.noisy_views(snr_db, seed)?;
        let params = &self.config.reconstruction;
        let mut music_points: Option<(Vec<DetectedPoint>, f64)> = None;
        let mut out = Vec::with_capacity(self.config.methods.len());
        for &method in &self.config.methods {
            let start = Instant::now();
            let (points, carried) = match (method.estimation(), &music_points) {
                (EstimationMethod::Music, Some((p, t))) => (p.clone(), *t),
                (est, _) => {
                    let p = self.scatter_points(&noisy, est)?;
                    if est == EstimationMethod::Music {
                        music_points = Some((p.clone(), start.elapsed().as_secs_f64()));
                    }
                    (p, 0.0)
                }
            };
            let positions: Vec<Vec2> = points.iter().map(|p| p.position).collect();
            let unrefined = ht_pca_tsr(&positions, params);
            let mut shape = unrefined.clone();
            let mut reflections = Vec::new();
            let mut events = Vec::new();
            if method == Method::Refined {
                reflections = self.reflections(&noisy)?;
                for r in &reflections {
                    let dir = r.surface_dir().expect("reflections carry a normal");
                    events.push(refine_with_reflection(
                        &mut shape, &positions, r.position, dir, params,
                    ));
                }
            }
            let runtime = carried + start.elapsed().as_secs_f64();
            let result = self.score(snr_db, method, trial, &points, &shape, runtime);
            out.push(TrialOutcome {
                result,
                points,
                reflections,
                unrefined,
                shape,
                events,
            });
        }
        Ok(out)
    }

    /// Trial results for every configured method; a pipeline error becomes
    /// a failure record instead of aborting.
    pub fn trial_results(&self, snr_index: usize, trial: usize) -> Vec<TrialResult> {
        match self.run_trial(snr_index, trial) {
            Ok(outcomes) => outcomes.into_iter().map(|o| o.result).collect(),
            Err(e) => self
                .config
                .methods
                .iter()
                .map(|m| TrialResult {
                    snr_db: self.config.snr_db[snr_index],
                    method: m.as_str().to_string(),
                    trial,
                    mse: None,
                    direction_error: None,
                    closed: false,
                    num_points: 0,
                    num_edges: 0,
                    failure: Some(e.to_string()),
                    runtime: 0.0,
                })
                .collect(),
        }
    }

    /// Run the full sweep in parallel. With a checkpoint, finished trials
    /// are appended as JSON lines and skipped when the sweep is restarted.
    /// Results come back ordered by (SNR, method, trial) as configured.
    pub fn run_sweep(&self, checkpoint: Option<&Path>) -> Result<Vec<TrialResult>, Error> {
        let mut done: Vec<TrialResult> = Vec::new();
        let writer = match checkpoint {
            Some(path) => {
                done = self.read_checkpoint(path)?;
                let mut file = OpenOptions::new().create(true).append(true).open(path)?;
                if done.is_empty() && file.metadata()?.len() == 0 {
                    writeln!(
                        file,
                        "{}",
                        serde_json::to_string(&self.config_fingerprint())?
                    )?;
                }
                Some(Mutex::new(file))
            }
            None => None,
        };
        let finished: BTreeSet<(usize, usize)> = done
            .iter()
            .filter_map(|r| self.snr_index(r.snr_db).map(|s| (s, r.trial)))
            .collect();
        let jobs: Vec<(usize, usize)> = (0..self.config.snr_db.len())
            .flat_map(|s| (0..self.config.trials).map(move |t| (s, t)))
            .filter(|job| !finished.contains(job))
            .collect();
        let fresh: Vec<TrialResult> = jobs
            .par_iter()
            .map(|&(s, t)| -> Result<Vec<TrialResult>, Error> {
                let results = self.trial_results(s, t);
                if let Some(w) = &writer {
                    let mut lines = String::new();
                    for r in &results {
                        lines.push_str(&serde_json::to_string(r)?);
                        lines.push('\n');
                    }
                    let mut f = w.lock().expect("checkpoint lock");
                    f.write_all(lines.as_bytes())?;
                    f.flush()?;
                }
                Ok(results)
            })
            .collect::<Result<Vec<_>, Error>>()?
            .into_iter()
            .flatten()
            .collect();
        let mut all = done;
        all.extend(fresh);
        self.sort_results(&mut all);
        Ok(all)
    }

    /// The config as TOML, which keeps floats exact and allows infinite SNR.
    fn config_fingerprint(&self) -> String {
        toml::to_string(&self.config).expect("experiment config serializes")
    }

    fn snr_index(&self, snr_db: f64) -> Option<usize> {
        self.config.snr_db.iter().position(|&s| s == snr_db)
    }

    fn method_index(&self, method: &str) -> Option<usize> {
        self.config
            .methods
            .iter()
            .position(|m| m.as_str() == method)
    }

    fn sort_results(&self, results: &mut [TrialResult]) {
        results.sort_by_key(|r| {
            (
                self.snr_index(r.snr_db),
                self.method_index(&r.method),
                r.trial,
            )
        });
    }

    /// Completed trials from a checkpoint written by the same config. A
    /// trial counts only when every configured method is present.
    fn read_checkpoint(&self, path: &Path) -> Result<Vec<TrialResult>, Error> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut lines = BufReader::new(file).lines();
        let Some(header) = lines.next().transpose()? else {
            return Ok(Vec::new());
        };
        let saved: String = serde_json::from_str(&header)?;
        if saved != self.config_fingerprint() {
            return Err(ConfigError::Invalid(format!(
                "checkpoint {} was written by a different configuration",
                path.display()
            ))
            .into());
        }
        let mut results = Vec::new();
        for line in lines {
            let line = line?;
            // a line cut short by an interruption is dropped
            if let Ok(r) = serde_json::from_str::<TrialResult>(&line) {
                results.push(r);
            }
        }
        let mut per_trial: std::collections::BTreeMap<(usize, usize), Vec<TrialResult>> =
            Default::default();
        for r in results {
            if let (Some(s), Some(_)) = (self.snr_index(r.snr_db), self.method_index(&r.method)) {
                per_trial.entry((s, r.trial)).or_default().push(r);
            }
        }
        let methods = self.config.methods.len();
        Ok(per_trial
            .into_values()
            .filter(|v| v.len() == methods)
            .flatten()
            .collect())
    }

    /// Write the requested intermediate results of one trial into `dir`.
    pub fn dump_trial(
        &self,
        snr_index: usize,
        trial: usize,
        stages: &[DumpStage],
        dir: &Path,
    ) -> Result<(), Error> {
        std::fs::create_dir_all(dir)?;
        let snr_db = self.config.snr_db[snr_index];
        let tag = format!("snr{snr_db}_trial{trial}");
        let noisy = self.noisy_views(snr_db, self.trial_seed(snr_index, trial))?;
        for (v, h) in &noisy {
            let view = format!("{tag}_view{}-{}", v.tx, v.rx);
            if stages.contains(&DumpStage::Paths) {
                write_paths_csv(
                    &v.paths,
                    File::create(dir.join(format!("{view}_paths.csv")))?,
                )?;
            }
            if stages.contains(&DumpStage::Tensor) {
                write_tensor(h, File::create(dir.join(format!("{view}_tensor.bin")))?)?;
            }
            if stages.contains(&DumpStage::Periodogram) {
                let w = apply_window(h);
                write_periodogram_csv(
                    &aoa_periodogram(w.tensor()),
                    File::create(dir.join(format!("{view}_aoa.csv")))?,
                )?;
                let second = match v.mode {
                    SensingMode::DualBs => aoa_aod_periodogram(w.tensor()),
                    SensingMode::SingleBs => aoa_delay_periodogram(w.tensor()),
                };
                write_periodogram_csv(&second, File::create(dir.join(format!("{view}_2d.csv")))?)?;
            }
        }
        if stages.contains(&DumpStage::Points) || stages.contains(&DumpStage::Shape) {
            for o in self.run_trial(snr_index, trial)? {
                let name = format!("{tag}_{}", o.result.method);
                if stages.contains(&DumpStage::Points) {
                    let mut all = o.points.clone();
                    all.extend(o.reflections.iter().copied());
                    write_points_csv(&all, File::create(dir.join(format!("{name}_points.csv")))?)?;
                }
                if stages.contains(&DumpStage::Shape) {
                    write_shape_csv(
                        &o.shape,
                        close_polygon(&o.shape).as_ref(),
                        File::create(dir.join(format!("{name}_shape.csv")))?,
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Average reflections whose positions lie within `radius` of the first
/// member of a group; positions and unit normals are averaged.
pub fn merge_reflections(found: Vec<DetectedPoint>, radius: f64) -> Vec<DetectedPoint> {
    let mut groups: Vec<Vec<DetectedPoint>> = Vec::new();
    for p in found {
        match groups
            .iter_mut()
            .find(|g| (g[0].position - p.position).norm() <= radius)
        {
            Some(g) => g.push(p),
            None => groups.push(vec![p]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let n = g.len() as f64;
            let position = g.iter().map(|p| p.position).sum::<Vec2>() / n;
            let normal = g.iter().filter_map(|p| p.normal).sum::<Vec2>();
            let mut merged = DetectedPoint::reflection(position, normal);
            merged.source = g[0].source;
            merged
        })
        .collect()
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub method: String,
    pub mse_mean: Option<f64>,
    pub mse_std: Option<f64>,
    pub dir_err_mean: Option<f64>,
    pub close_rate: f64,
    pub n_trials: usize,
}

/// Aggregate trials into one row per (SNR, method), keeping the order in
/// which the pairs first appear.
pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in results {
        if !keys.iter().any(|(s, m)| *s == r.snr_db && *m == r.method) {
            keys.push((r.snr_db, r.method.clone()));
        }
    }
    keys.into_iter()
        .map(|(snr_db, method)| {
            let group: Vec<TrialResult> = results
                .iter()
                .filter(|r| r.snr_db == snr_db && r.method == method)
                .cloned()
                .collect();
            let mse: Vec<f64> = group.iter().filter_map(|r| r.mse).collect();
            let dir: Vec<f64> = group.iter().filter_map(|r| r.direction_error).collect();
            let mse_stats = mean_std(&mse);
            SummaryRow {
                snr_db,
                method,
                mse_mean: mse_stats.map(|s| s.0),
                mse_std: mse_stats.map(|s| s.1),
                dir_err_mean: mean_std(&dir).map(|s| s.0),
                close_rate: close_rate(&group),
                n_trials: group.len(),
            }
        })
        .collect()
}

/// Results table with columns
/// `snr_db,method,mse_mean,mse_std,dir_err_mean,close_rate,n_trials`.
pub fn write_results_csv<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per trial, including failures and runtimes.
pub fn write_trials_csv<W: Write>(results: &[TrialResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
