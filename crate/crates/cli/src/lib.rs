//! Command-line pipeline: synthesize scenes, train, evaluate and roll out.

pub mod commands;
pub mod config;

pub use commands::{cmd_eval, cmd_rollout, cmd_synth, cmd_train};
pub use config::{Overrides, RunConfig};
