//! Command-line harness around `bayesrisk_core`.
//!
//! Subcommands `risk`, `curve` and `phase` write asymptotic risks as CSV;
//! `simulate` runs seeded Monte Carlo replicates and summarizes them against
//! the analytic predictions in JSON; `validate` runs the acceptance suite.
//!
//! Exit codes: 0 success, 1 validation failure (or I/O error), 2 usage
//! error, 3 numerical failure.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod validation;

pub use config::{RunConfig, Settings};
pub use error::{exit, HarnessError, Result};
