//! File formats and command execution for the `catfair` command-line tool.
//! The binary in this crate is a thin argument-parsing wrapper around
//! [`run::run`], so integration tests can drive commands in-process.

pub mod formats;
pub mod run;
