//! Config loading, engine dispatch and report emission for the `osclaims` binary.

pub mod config;
pub mod ini;
pub mod report;
pub mod run;

pub use config::{ConfigError, EngineChoice, Format, RunConfig};
pub use report::{Report, Row};
pub use run::{Command, Failure, Outcome, Overrides};
