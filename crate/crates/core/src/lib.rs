//! Learning from demonstration with adaptive explanatory feedback.

pub mod config;
pub mod error;
pub mod eventlog;
pub mod explainer;
pub mod gridworld;
pub mod irl;
pub mod metrics;
pub mod planner;
pub mod protocol;
pub mod simteacher;

pub use error::{Error, Result};
