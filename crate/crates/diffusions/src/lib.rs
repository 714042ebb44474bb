//! Std companion to `entrance-core`: worker pools, the verification
//! battery, file formats and the command-line front end.

pub mod cli;
pub mod ensemble;
pub mod io;
pub mod verify;

pub use entrance_core as core;

/// Version stamped into every output header and report.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
