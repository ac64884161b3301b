//! Stage orchestration over a run directory of plain-file artifacts.

mod artifacts;
mod config;
mod stages;

use thiserror::Error;

pub use artifacts::{read_json, read_jsonl, read_manifest, sha256_hex, Manifest, ManifestEntry, RunDir, MANIFEST};
pub use config::{
    FeaturesSection, FilterSection, GraphSection, ItemsetsSection, LlmSection, PathsConfig, PipelineConfig,
    TrainSection, TrendsSection,
};
pub use stages::{run_stage, MetricsReport, Stage};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{stage}: missing input artifact {path}")]
    MissingInput { stage: &'static str, path: String },
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}
