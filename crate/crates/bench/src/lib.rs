//! Instance files, experiment configuration, reports and the `ppcm`
//! command-line harness built on `ppcm-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod matrix_io;
pub mod report;

pub use commands::{cmd_compare, cmd_generate, cmd_run, Comparison, Manifest};
pub use config::{ConstraintSpec, ExperimentConfig, MethodSpec, ProblemSpec};
pub use error::{BenchError, Result};
pub use report::{ComparisonReport, MethodResult};
