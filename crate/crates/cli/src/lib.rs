//! File formats, configuration and the command implementations behind the
//! `crcurv` binary.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod kexpr;
pub mod report;

pub use config::{Mode, RunConfig};
pub use error::{exit, CliError, Result};
