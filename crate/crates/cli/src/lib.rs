//! Library surface of the `natcap` command-line pipeline: configuration
//! loading and stage orchestration, reused by the binary and the test
//! suites.

pub mod config;
pub mod pipeline;
