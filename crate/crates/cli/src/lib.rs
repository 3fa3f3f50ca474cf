//! Library half of the `holocr` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
