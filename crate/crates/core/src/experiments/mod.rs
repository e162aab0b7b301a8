//! Scenario files, verification suites and persisted outputs.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod verify;

pub use config::{load_scenario, parse_scenario, to_toml, ScenarioConfig, Suite, VerifySpec};
pub use output::{read_estimates, recompute_report, write_outputs, OutputSet};
pub use pipeline::{build_report, estimate, execute, Completed, Estimates};
pub use verify::{AnalyticCurve, BoundReport, CheckKind, CheckRecord};
