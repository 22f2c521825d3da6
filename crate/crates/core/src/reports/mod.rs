//! Experiment configuration, suite orchestration and report files.

pub mod config;
pub mod record;
pub mod suites;

pub use config::{ExperimentConfig, Suite};
pub use record::{Report, ReportRecord, Verdict};
pub use suites::{run, Overrides};
