//! Configuration files, presets and the subcommands behind the binary.

pub mod config;
pub mod run;

pub use config::{load_config, BenchmarkConfig, ExperimentFile, ExperimentSpec, PoolEntry, Preset};
pub use run::{run, sha256_hex, Command, Manifest, OutputFile, RunReport};
