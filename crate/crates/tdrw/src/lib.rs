//! Experiment runner for random walks among time-dependent conductances:
//! JSON configuration, CSV/JSON artifacts, a parallel batch runner, the
//! acceptance criteria and the `tdrw` command line.

// `!(x > 0.0)` is used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod criteria;
pub mod error;
pub mod experiment;
pub mod io;
pub mod runner;

pub use error::{CliError, Result};
