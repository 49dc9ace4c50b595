//! Library surface of the `exdag` experiment harness.
//!
//! The binary in `main.rs` is a thin argument-parsing shell over these
//! modules; exposing them as a library lets integration tests drive
//! experiments in-process with the exact code paths the CLI uses.

pub mod config;
pub mod dataio;
pub mod experiments;
pub mod report;
