//! Experiments, verification suites and file formats for `retrodict-core`.

pub mod channel_io;
pub mod config;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod format;
pub mod heatmap;
pub mod verify;

pub use error::CliError;
