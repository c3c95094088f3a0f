//! Experiment runner, verification suites and plotting for the `hotune`
//! optimizers.
//!
//! A run is described by an [`ExperimentConfig`] (JSON). Running it writes one
//! CSV trace per method, a log-scale SVG overlay and a JSON summary into the
//! config's output directory.

pub mod config;
pub mod error;
pub mod plot;
pub mod runner;
pub mod trace;
pub mod verify;

pub use config::{Experiment, ExperimentConfig, GainsMode, ImageSource, Suite};
pub use error::CliError;
pub use runner::{resolve_gains, run_experiment, run_method, ResolvedGains, RunOutcome, RunSummary};
pub use trace::{Trace, TraceRow};
pub use verify::{run_suite, CheckResult, SuiteReport};

/// Environment variable naming the directory relative output paths resolve against.
pub const OUTPUT_ROOT_VAR: &str = "HOTUNE_OUTPUT_ROOT";

/// `$HOTUNE_OUTPUT_ROOT`, or the working directory.
pub fn output_root() -> std::path::PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map(Into::into).unwrap_or_else(|| ".".into())
}
