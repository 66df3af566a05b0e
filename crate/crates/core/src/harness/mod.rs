//! Experiment driver: configs, manufactured-solution studies, eps sweeps and report output.

mod config;
mod emit;
mod manufactured;
mod sweep;

use thiserror::Error;

pub use config::*;
pub use emit::*;
pub use manufactured::*;
pub use sweep::*;

pub const SCHEMA: &str = "sif-lab/1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Extraction(#[from] crate::extraction::ExtractionError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error(transparent)]
    Angular(#[from] crate::angular::AngularError),
    #[error(transparent)]
    Fem(#[from] crate::fem::FemError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
