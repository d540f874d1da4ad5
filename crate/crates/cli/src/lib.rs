//! Scenario runner for the thermorelax solvers: TOML scenario files,
//! named presets, CSV output and the acceptance suite.

pub mod check;
pub mod config;
pub mod output;
pub mod presets;
pub mod scenario;

pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use output::emit_outputs;
pub use scenario::{run_scenario, RunError, RunReport, RunStatus};
