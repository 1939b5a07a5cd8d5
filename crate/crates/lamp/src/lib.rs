//! Policy store, engine, HTTP service and command line for the LAMP
//! photo privacy engine.

pub mod cli;
pub mod config;
pub mod engine;
pub mod service;
pub mod store;

pub use config::EngineConfig;
pub use engine::{Engine, EngineError, ErrorKind};
