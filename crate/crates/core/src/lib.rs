//! Simulation and processing pipeline for sensing the shape of a convex
//! target with a mmWave MIMO-OFDM network.

pub mod channel;
pub mod config;
pub mod estimate;
pub mod experiment;
pub mod geometry;
pub mod localize;
pub mod metrics;
pub mod raytrace;
pub mod reconstruct;
pub mod scene;

use thiserror::Error;

/// Any failure of the end-to-end pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Scene(#[from] scene::SceneError),
    #[error(transparent)]
    Raytrace(#[from] raytrace::RaytraceError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Estimate(#[from] estimate::EstimateError),
    #[error(transparent)]
    Localize(#[from] localize::LocalizeError),
    #[error(transparent)]
    Reconstruct(#[from] reconstruct::ReconstructError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
