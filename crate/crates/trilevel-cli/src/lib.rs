//! Command-line front end for the `trilevel` engine library: config file
//! handling, deterministic artifact emission, and the subcommand logic.

pub mod commands;
pub mod config;
pub mod emit;
