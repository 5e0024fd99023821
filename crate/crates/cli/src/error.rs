use crate::config::ConfigError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const VALIDATION: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] risnoma_core::Error),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("validation failed: {failed} of {total} comparisons out of tolerance")]
    Validation { failed: usize, total: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        use risnoma_core::Error as E;
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::Model(E::Infeasible { .. } | E::NoFeasibleAllocation) | RunError::Infeasible(_) => {
                exit::INFEASIBLE
            }
            RunError::Validation { .. } => exit::VALIDATION,
            _ => exit::OTHER,
        }
    }
}
