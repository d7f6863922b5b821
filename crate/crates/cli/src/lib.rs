//! Scenario configuration, output writers and subcommand drivers for the
//! `coherence` binary.

pub mod config;
pub mod output;
pub mod run;
pub mod validate;
