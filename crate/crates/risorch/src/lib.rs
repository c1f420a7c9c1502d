//! File formats, configuration, parallel execution and the command-line
//! front end for `risorch-core`.

pub mod app;
pub mod config;
pub mod pool;
pub mod report;
pub mod store;
