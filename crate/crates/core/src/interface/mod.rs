//! Front ends over the governance engine: configuration, the engine that
//! owns the registry writer, the CLI and the HTTP service.

pub mod cli;
pub mod config;
pub mod engine;
pub mod service;

pub use config::{AdoptionMode, ConfigError, EngineConfig, ServiceConfig};
pub use engine::*;
