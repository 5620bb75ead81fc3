//! File-driven front end for the `mdpcg` toolkit.
//!
//! Game descriptions are JSON documents (see [`gamefile`]); results go to
//! stdout as JSON or CSV, diagnostics to stderr. Exit codes: 0 ok,
//! 1 validation failure, 2 parse or usage error, 3 solver failure,
//! 4 degenerate equilibrium, 5 non-invertible transformation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod gamefile;
pub mod json;

pub use commands::{execute, Cli, Command};
pub use error::CliError;
