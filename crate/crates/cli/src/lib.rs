//! Campaign runner for the `grover-sim` command-line tool.

pub mod campaigns;
pub mod config;
pub mod output;
pub mod report;
pub mod results;
