//! Experiment runners behind the `risnoma` command line.
//!
//! Each runner takes a validated [`config::ExperimentConfig`] and returns an
//! in-memory table; [`output`] turns tables into CSV files plus a run manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::RunError;
