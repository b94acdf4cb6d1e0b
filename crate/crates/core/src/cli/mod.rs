//! Configuration-driven experiments behind the `evofrac` binary.

pub mod config;
mod run;

pub use self::config::{parse_config, parse_config_in, ConfigError, ConfigIssue, ExperimentConfig, ExperimentKind, RawConfig};
pub use self::run::{run, RunOutcome};
