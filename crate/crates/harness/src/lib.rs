//! Experiment recipes, configuration and output plumbing behind the `mer`
//! command-line tool.
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod recipes;
pub mod seeds;
pub mod svg;

pub use config::Config;
pub use error::{exit_code, HarnessError, Result};
pub use manifest::{execute, replay, RunManifest};
pub use output::Format;
pub use recipes::{Recipe, Runner};
