//! Command-line front end: configuration, the experiment commands and their
//! JSON/CSV reports.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (or a
//! comparison differs), 2 for usage and configuration errors.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod commands;
pub mod config;
pub mod report;

pub use app::{run_app, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};
pub use commands::run;
pub use config::{Command, RunConfig};
pub use report::{CheckRecord, LemmaTag, Report, SCHEMA_VERSION};
