//! Library half of the `chainphase` command: term loading, JSON encodings and
//! the subcommands themselves.

pub mod commands;
pub mod input;
pub mod json;
