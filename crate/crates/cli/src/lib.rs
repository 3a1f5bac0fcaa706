//! Library side of the `stencilforge` command: configuration, the artifact
//! manifest and the stage runners, kept here so tests can drive them
//! without spawning the binary.

pub mod config;
pub mod manifest;
pub mod stages;

pub use config::PipelineConfig;
pub use manifest::Manifest;
pub use stages::{run_decompose, run_mesh, run_pipeline, run_simulate, run_stipple};
