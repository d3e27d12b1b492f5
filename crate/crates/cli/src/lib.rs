//! Configuration, orchestration and artifact output for the `lepage` command.

pub mod config;
pub mod output;
pub mod run;
