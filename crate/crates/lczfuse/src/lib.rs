//! File formats, scene manifests and the `lczfuse` command line.

pub mod cli;
pub mod error;
pub mod io;
pub mod manifest;
pub mod run;
pub mod synth_io;

pub use error::{CliError, Result};
pub use lczfuse_core as core;
