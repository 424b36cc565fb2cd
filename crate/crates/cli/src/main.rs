//! Command-line runner for shape-sensing sweeps.
//!
//! ```text
//! shapesense --config sweep.toml --snr 5,10,15 --trials 20 --out results
//! shapesense reconstruct points.csv --out shape.csv
//! ```
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 when the
//! pipeline fails at run time.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shapesense::experiment::{
    desk_reconstruction, summarize, write_results_csv, write_trials_csv, DumpStage, Experiment,
    ExperimentConfig, Method, SummaryRow,
};
use shapesense::geometry::Vec2;
use shapesense::localize::read_points_csv;
use shapesense::raytrace::PathKind;
use shapesense::reconstruct::{close_polygon, ht_pca_tsr, refine_with_reflection, write_shape_csv};
use shapesense::Error;

#[derive(Parser, Debug)]
#[command(
    name = "shapesense",
    version,
    about = "Sense the shape of a convex target from MIMO-OFDM channels"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reconstruct edges from a points CSV (columns kind,x,y,nx,ny).
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment TOML; built-in desk experiment when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated SNR list in dB; `inf` disables noise.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Methods to run; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<Method>>,
    /// 128x128 antennas and 256 subcarriers instead of the desk-scale system.
    #[arg(long)]
    paper_scale: bool,
    /// Write intermediate results of trial 0 at every SNR into OUT/dump.
    #[arg(long, value_delimiter = ',')]
    dump: Vec<DumpStage>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Discard an existing checkpoint instead of resuming from it.
    #[arg(long)]
    fresh: bool,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    points: PathBuf,
    /// Take reconstruction settings from this experiment TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shape CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure together with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Scene(_) => 2,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn runtime(context: &str, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 3,
        message: format!("{context}: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Some(Command::Reconstruct(args)) => reconstruct(&args),
        None => run(&cli.run),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p).map_err(Error::from)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(snr) = &args.snr {
        cfg.snr_db = snr.clone();
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.method {
        cfg.methods = m.clone();
    }
    if args.paper_scale {
        cfg.paper_scale = true;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    let out = cfg.out_dir.clone();
    let exp = Experiment::from_config(cfg)?;

    std::fs::create_dir_all(&out)
        .map_err(|e| runtime(&format!("cannot create {}", out.display()), e))?;
    let checkpoint = out.join("checkpoint.jsonl");
    if args.fresh && checkpoint.exists() {
        std::fs::remove_file(&checkpoint).map_err(|e| runtime("cannot remove checkpoint", e))?;
    }
    let c = exp.config();
    eprintln!(
        "{} views, {} SNR values x {} trials x {} methods",
        exp.views().len(),
        c.snr_db.len(),
        c.trials,
        c.methods.len()
    );
    let results = exp.run_sweep(Some(&checkpoint))?;
    let rows = summarize(&results);

    let create = |name: &str| {
        let path = out.join(name);
        File::create(&path).map_err(|e| runtime(&format!("cannot write {}", path.display()), e))
    };
    write_results_csv(&rows, create("results.csv")?).map_err(|e| runtime("results.csv", e))?;
    write_trials_csv(&results, create("trials.csv")?).map_err(|e| runtime("trials.csv", e))?;

    if !args.dump.is_empty() {
        let dir = out.join("dump");
        for s in 0..exp.config().snr_db.len() {
            exp.dump_trial(s, 0, &args.dump, &dir)?;
        }
    }

    print_table(&rows);
    let failed = results.iter().filter(|r| r.failure.is_some()).count();
    if failed > 0 {
        eprintln!(
            "{failed} of {} trial records carry a failure; see trials.csv",
            results.len()
        );
    }
    Ok(())
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$e}"))
}

fn print_table(rows: &[SummaryRow]) {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let _ = writeln!(
        w,
        "{:>8} {:>14} {:>10} {:>10} {:>6} {:>6}",
        "snr_db", "method", "mse", "dir_err", "close", "n"
    );
    for r in rows {
        let _ = writeln!(
            w,
            "{:>8} {:>14} {:>10} {:>10} {:>6.2} {:>6}",
            r.snr_db,
            r.method,
            opt(r.mse_mean, 2),
            r.dir_err_mean
                .map_or_else(|| "-".into(), |d| format!("{d:.3}")),
            r.close_rate,
            r.n_trials
        );
    }
}

fn reconstruct(args: &ReconstructArgs) -> Result<(), Failure> {
    let params = match &args.config {
        Some(p) => load_config(Some(p))?.reconstruction,
        None => desk_reconstruction(),
    };
    params
        .validate()
        .map_err(|e| Failure::config(format!("reconstruction settings: {e}")))?;
    let file = File::open(&args.points)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", args.points.display())))?;
    let points = read_points_csv(file)
        .map_err(|e| Failure::config(format!("{}: {e}", args.points.display())))?;

    let scatter: Vec<Vec2> = points
        .iter()
        .filter(|p| p.kind == PathKind::Scatter)
        .map(|p| p.position)
        .collect();
    let mut shape = ht_pca_tsr(&scatter, &params);
    for r in points.iter().filter(|p| p.kind == PathKind::Reflect) {
        let dir = r.surface_dir().expect("reflection rows carry a normal");
        refine_with_reflection(&mut shape, &scatter, r.position, dir, &params);
    }
    let closed = close_polygon(&shape);
    eprintln!(
        "{} scattering points, {} edges, {}",
        scatter.len(),
        shape.num_edges(),
        if closed.is_some() { "closed" } else { "open" }
    );
    let result = match &args.out {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| runtime(&format!("cannot write {}", path.display()), e))?;
            write_shape_csv(&shape, closed.as_ref(), f)
        }
        None => write_shape_csv(&shape, closed.as_ref(), std::io::stdout().lock()),
    };
    result.map_err(|e| runtime("shape CSV", e))
}
