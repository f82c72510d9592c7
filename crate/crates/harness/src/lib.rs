//! Verification suites, consistency sweeps and a minimization driver for the
//! `bondvol` coupling energies, plus the plumbing of the `bondvol` CLI.

pub mod config;
pub mod error;
pub mod minimize;
pub mod model;
pub mod report;
pub mod suites;
pub mod sweep;

pub use config::{ConfigError, Overrides, RunConfig};
pub use error::{Error, Result};
pub use report::{Check, Status, SuiteReport};
