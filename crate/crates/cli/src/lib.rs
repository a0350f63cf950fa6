//! Command implementations behind the `rectiplan` binary.

pub mod analyze;
pub mod config;
pub mod design;
pub mod error;
pub mod oracle;
pub mod output;
pub mod preset;

pub use config::{LoadedConfig, RunConfig};
pub use error::{CliError, Result};
