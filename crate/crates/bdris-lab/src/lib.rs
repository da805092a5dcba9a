//! Batch-simulation harness: configuration, seeded parallel Monte-Carlo
//! execution, CSV persistence, and the numerical validation suite.

pub mod config;
pub mod report;
pub mod runner;
pub mod validate;

pub use config::{ArchSpec, Connectivity, ExperimentConfig, ExperimentKind, PowerSplit, SweepSpec, SweepVariable};
pub use report::{emit_csv, emit_summary_csv, read_csv, ResultRow, SummaryRow};
pub use runner::{run_experiment, RunOutput};
pub use validate::{validate_suite, ValidationReport};
