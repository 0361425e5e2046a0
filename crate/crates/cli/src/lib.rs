//! Library surface of the experiment CLI: config parsing, checkpoint
//! persistence, run orchestration, and output formatting. The `slimrnn`
//! binary is a thin argument-parsing layer over these modules.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod fmt;
pub mod run;
