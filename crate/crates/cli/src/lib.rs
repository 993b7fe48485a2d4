//! Batch scenario runner for the `adaptctl` library.
//!
//! A scenario is a JSON document naming a loop kind and its plant,
//! reference, controller, disturbance and simulation blocks, plus criteria
//! evaluated on the logged trajectory. [`config::validate_config`] reports
//! every problem in one pass; [`run::run_scenario`] runs a validated config
//! and writes the trajectory and a [`run::RunReport`].

pub mod build;
pub mod bundled;
pub mod certify;
pub mod config;
pub mod families;
pub mod run;

pub use config::{emit, validate_config, validate_str, ScenarioConfig};
pub use run::{run_scenario, OutputFormat, RunReport};
