//! The `vmd` command line: offline detection, training and the
//! evaluation grid, synthetic corpora, pseudo-labeling, the streaming
//! server, a load generator, and latency benchmarking.

pub mod args;
pub mod commands;
pub mod config_file;
pub mod loadtest;
pub mod table;

pub use args::Cli;
pub use commands::execute;
