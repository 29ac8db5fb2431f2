//! Experiment runner for `afbm-core`: TOML experiment specs, shipped presets,
//! and the CSV/summary artifacts each run writes.

pub mod presets;
pub mod run;
pub mod spec;

pub use run::{run, ExperimentReport, RunError};
pub use spec::{Diagnostic, ExperimentKind, ExperimentSpec};
