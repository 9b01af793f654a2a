//! Library surface of the benchmark harness, split out so integration tests
//! can drive commands in-process.

pub mod commands;
pub mod config;
pub mod error;
