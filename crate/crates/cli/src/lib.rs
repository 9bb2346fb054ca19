//! Command-line front end for the solwave solvers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
