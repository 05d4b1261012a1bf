//! Experiment orchestration: configuration and topology loading, the
//! multi-UAV offloading loop, the figure/table runners, and report output.

use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod offload;
pub mod report;
pub mod svg;
pub mod topology;

pub use config::{load_config, ExperimentConfig};
pub use experiments::{run_experiment, Experiment, RunSummary, EXPERIMENTS};
pub use offload::{run_offload_sim, AgentKind, OffloadResult};
pub use report::emit_report;
pub use topology::{load_topology, Topology};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{}", match .line { Some(l) => format!("line {l}: {msg}"), None => msg.clone() })]
    Validation { line: Option<usize>, msg: String },
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl HarnessError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation { line: None, msg: msg.into() }
    }

    pub fn at_line(line: usize, msg: impl Into<String>) -> Self {
        Self::Validation { line: Some(line), msg: msg.into() }
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        Self::Runtime(e.to_string())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    /// Process exit status: 1 usage, 2 validation, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Validation { .. } => 2,
            Self::Runtime(_) | Self::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
