//! File formats, multithreaded stages and the compile pipeline behind the
//! `tbe` command.

pub mod error;
pub mod formats;
pub mod parallel;
pub mod pipeline;

pub use error::{exit, CliError, CliResult};
pub use pipeline::{run_pipeline, run_verify, PipelineConfig};
