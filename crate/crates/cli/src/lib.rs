//! Scenario loading and the commands behind the `covham` binary.

pub mod commands;
pub mod exit;
pub mod output;
pub mod scenario;
pub mod verify;

pub use exit::{CliError, ExitKind};
pub use scenario::{load_scenario, Model, Scenario};
