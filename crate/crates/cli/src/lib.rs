//! Configuration, file formats and subcommands behind the `jflow` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod series;
pub mod summary;
