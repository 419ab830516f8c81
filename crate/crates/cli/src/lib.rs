//! Command-line front end: single queries, CSV sweeps and the validation
//! suite.

pub mod config;
pub mod format;
pub mod params;
pub mod query;
pub mod sweep;
pub mod validate;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "OUTCAP_THREADS";
