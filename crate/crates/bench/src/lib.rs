//! Seeded, resumable experiments over Whitehead's algorithm and word samplers.

pub mod config;
pub mod experiments;
pub mod record;
pub mod runner;
pub mod sampler;

pub use config::{ExperimentConfig, ExperimentId, Params, SamplerSpec};
pub use record::{Status, Summary, TrialRecord};
pub use runner::{run, RunOptions, RunReport};
