//! Turning estimated path parameters into world-frame points.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{EstimationMethod, PathEstimate, SensingMode};
use crate::geometry::{cross, perp, Vec2, SPEED_OF_LIGHT};
use crate::raytrace::PathKind;
use crate::scene::{BaseStation, SystemConfig};

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error("departure and arrival rays are nearly parallel (|sin| = {0:.2e})")]
    NearParallelRays(f64),
    #[error("departure and arrival rays meet behind an array")]
    RaysBehindArray,
    #[error("delay must be positive, got {0}")]
    NonPositiveDelay(f64),
    #[error("estimate is missing its {0}")]
    MissingParameter(&'static str),
    #[error("point cloud CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("point cloud CSV: {0}")]
    Format(String),
    #[error("point cloud CSV: {0}")]
    Io(#[from] std::io::Error),
}

/// Rays whose direction cross product is below this are rejected.
pub const PARALLEL_TOLERANCE: f64 = 1e-3;

/// Which stations and estimator produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSource {
    pub tx: usize,
    pub rx: usize,
    pub method: EstimationMethod,
}

/// A scattering or reflection point in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedPoint {
    pub position: Vec2,
    pub kind: PathKind,
    /// Estimated outward surface normal; reflections only.
    pub normal: Option<Vec2>,
    pub source: Option<PointSource>,
    /// False when a bistatic reflection's delay disagrees with its geometry.
    pub consistent: bool,
}

impl DetectedPoint {
    pub fn scatter(position: Vec2) -> Self {
        Self {
            position,
            kind: PathKind::Scatter,
            normal: None,
            source: None,
            consistent: true,
        }
    }

    /// Reflection point with the given surface normal (normalized here).
    pub fn reflection(position: Vec2, normal: Vec2) -> Self {
        Self {
            position,
            kind: PathKind::Reflect,
            normal: Some(normal.normalize()),
            source: None,
            consistent: true,
        }
    }

    /// Unit direction along the reflecting surface.
    pub fn surface_dir(&self) -> Option<Vec2> {
        self.normal.map(|n| perp(&n))
    }

    pub fn with_source(mut self, source: PointSource) -> Self {
        self.source = Some(source);
        self
    }
}

/// Intersection of the departure ray from `tx` and the arrival ray at `rx`.
pub fn localize_dual(
    aoa: f64,
    aod: f64,
    tx: &BaseStation,
    rx: &BaseStation,
) -> Result<Vec2, LocalizeError> {
    let u = tx.direction(aod);
    let v = rx.direction(aoa);
    let det = cross(&u, &v);
    if det.abs() < PARALLEL_TOLERANCE {
        return Err(LocalizeError::NearParallelRays(det.abs()));
    }
    // tx + s u = rx + t v
    let w = rx.position - tx.position;
    let s = cross(&w, &v) / det;
    let t = cross(&w, &u) / det;
    if s <= 0.0 || t <= 0.0 {
        return Err(LocalizeError::RaysBehindArray);
    }
    Ok(tx.position + u * s)
}

/// Monostatic ranging: half the round-trip distance along the arrival angle.
pub fn localize_single(aoa: f64, tau: f64, bs: &BaseStation) -> Result<Vec2, LocalizeError> {
    if !(tau > 0.0) {
        return Err(LocalizeError::NonPositiveDelay(tau));
    }
    Ok(bs.position + bs.direction(aoa) * (SPEED_OF_LIGHT * tau / 2.0))
}

/// Locate a scattering estimate according to the sensing mode.
pub fn localize_scatter(
    est: &PathEstimate,
    mode: SensingMode,
    tx: &BaseStation,
    rx: &BaseStation,
) -> Result<Vec2, LocalizeError> {
    match mode {
        SensingMode::DualBs => {
            let aod = est.aod.ok_or(LocalizeError::MissingParameter("AoD"))?;
            localize_dual(est.aoa, aod, tx, rx)
        }
        SensingMode::SingleBs => {
            let tau = est.tau.ok_or(LocalizeError::MissingParameter("delay"))?;
            localize_single(est.aoa, tau, rx)
        }
    }
}

/// Reflection point and surface orientation. The normal bisects the
/// directions from the point back to both stations; bistatic points whose
/// path length disagrees with `c * tau` by more than `c / (2B)` (modulo the
/// unambiguous range) are flagged inconsistent.
pub fn reflection_surface(
    est: &PathEstimate,
    mode: SensingMode,
    tx: &BaseStation,
    rx: &BaseStation,
    system: &SystemConfig,
) -> Result<DetectedPoint, LocalizeError> {
    let tau = est.tau.ok_or(LocalizeError::MissingParameter("delay"))?;
    let position = match mode {
        SensingMode::SingleBs => localize_single(est.aoa, tau, rx)?,
        SensingMode::DualBs => {
            let aod = est.aod.ok_or(LocalizeError::MissingParameter("AoD"))?;
            localize_dual(est.aoa, aod, tx, rx)?
        }
    };
    let to_tx = (tx.position - position).normalize();
    let to_rx = (rx.position - position).normalize();
    let mut point = DetectedPoint::reflection(position, to_tx + to_rx);
    if mode == SensingMode::DualBs {
        let length = (tx.position - position).norm() + (rx.position - position).norm();
        let span = SPEED_OF_LIGHT * system.max_delay();
        let diff = (length - SPEED_OF_LIGHT * tau).rem_euclid(span);
        let diff = diff.min(span - diff);
        point.consistent = diff < SPEED_OF_LIGHT / (2.0 * system.bandwidth);
    }
    Ok(point)
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRow {
    kind: String,
    x: f64,
    y: f64,
    nx: Option<f64>,
    ny: Option<f64>,
}

/// Write points as CSV with columns `kind,x,y,nx,ny`; normals are blank for
/// scatter points.
pub fn write_points_csv<W: Write>(points: &[DetectedPoint], out: W) -> Result<(), LocalizeError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(PointRow {
            kind: p.kind.as_str().to_string(),
            x: p.position.x,
            y: p.position.y,
            nx: p.normal.map(|n| n.x),
            ny: p.normal.map(|n| n.y),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<DetectedPoint>, LocalizeError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: PointRow = row?;
        let position = Vec2::new(row.x, row.y);
        let point = match row.kind.as_str() {
            "scatter" => DetectedPoint::scatter(position),
            "reflect" => match (row.nx, row.ny) {
                (Some(nx), Some(ny)) if nx.hypot(ny) > 0.0 => {
                    DetectedPoint::reflection(position, Vec2::new(nx, ny))
                }
                _ => {
                    return Err(LocalizeError::Format(
                        "reflect row needs a non-zero normal".into(),
                    ))
                }
            },
            other => return Err(LocalizeError::Format(format!("unknown kind `{other}`"))),
        };
        out.push(point);
    }
    Ok(out)
}
