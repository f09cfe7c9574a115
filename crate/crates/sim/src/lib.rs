//! Experiment orchestration on top of `judrs-core`: TOML configuration,
//! seeded Monte-Carlo runners and text exports.

pub mod config;
pub mod error;
pub mod experiments;
pub mod results;
