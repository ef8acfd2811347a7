//! Std side of the planner: HTTP and replay backends, scenario and config
//! files, batch runs and report emission.

pub mod files;
pub mod http;
pub mod runner;

pub use tamp_core as core;
