//! Configuration files and command execution behind the `nlsk` binary.

mod config;
mod execute;

pub use config::{Command, FieldSettings, GridSettings, GroundSettings, RunConfig, DEFAULT_DT, DEFAULT_GRID, DEFAULT_RECORD_EVERY, DEFAULT_T_FINAL};
pub use execute::{execute, initial_field, EXIT_SCIENTIFIC_FAILURE};
