//! Instance generation, file formats, batch runs and audits for the
//! [`expdesign`] mechanism.

pub mod audit;
pub mod batch;
pub mod format;
pub mod generate;
pub mod props;

use std::io;
use std::path::Path;

pub use audit::{audit_truthfulness, AuditReport};
pub use batch::{run_batch, BatchConfig, BatchResult, OracleMode, RunReport};
pub use format::{instance_digest, load_instance, InstanceFile};
pub use generate::{generate_instance, CostModel, GeneratorConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}: {1}")]
    Json(String, serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid instance file: {0}")]
    Schema(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] expdesign::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
