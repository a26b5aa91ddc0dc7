//! File formats, the command-line driver and replicate studies built on
//! `vbip-core`.

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod io;
pub mod study;

pub use config::{Command, ConfigArgs, Method, RunConfig};
pub use error::{CliError, Result};
