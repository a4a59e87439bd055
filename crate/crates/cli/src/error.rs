use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const C0_VIOLATION: i32 = 3;
    pub const C1_VIOLATION: i32 = 4;
    pub const CALIBRATION: i32 = 5;
    pub const CONSISTENCY: i32 = 6;
    pub const VERIFICATION: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] crcurv_core::Error),

    #[error("calibration failed: {0}")]
    Calibration(crcurv_core::Error),

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid TOML in {path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("cannot parse K expression {expr:?} {error}\n  {expr}\n  {caret}")]
    Expression { expr: String, error: crcurv_core::expr::ParseError, caret: String },

    #[error("{0}")]
    Usage(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use crcurv_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::C0Violation { .. } => exit::C0_VIOLATION,
                E::C1Violation { .. } => exit::C1_VIOLATION,
                E::Consistency(_) => exit::CONSISTENCY,
                E::Convention { .. } => exit::CALIBRATION,
                E::Config(_) | E::Input(_) | E::Precondition(_) | E::IncompleteMu { .. } | E::CapExceeded { .. } => {
                    exit::INPUT
                }
                _ => exit::FAILURE,
            },
            CliError::Calibration(_) => exit::CALIBRATION,
            CliError::Read { .. } | CliError::Toml { .. } | CliError::Expression { .. } | CliError::Usage(_) => {
                exit::INPUT
            }
            CliError::Verification(_) => exit::VERIFICATION,
            CliError::Write { .. } | CliError::Json(_) | CliError::Csv(_) => exit::FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
