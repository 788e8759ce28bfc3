//! Batch front end for `spinorbit-core`: reads a JSON run configuration,
//! executes the pipeline up to the requested task and writes a JSON report
//! together with CSV tables.

pub mod config;
pub mod json;
pub mod pipeline;

pub use config::{ConfigError, RunConfig, Task};
pub use pipeline::{run, RunError, SpectralReport};
