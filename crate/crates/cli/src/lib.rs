//! Command-line harness for the coupler simulator: configuration, width
//! sweeps, CSV figure data, SVG plots and run manifests.

pub mod config;
pub mod error;
pub mod figures;
pub mod run;
pub mod table;

pub use config::RunConfig;
pub use error::{CliError, Result};
