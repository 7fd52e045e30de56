//! Experiment runner behind the `virlab` binary: config resolution, the
//! experiment table, and CSV/manifest emission.

pub mod config;
pub mod experiments;
pub mod output;
