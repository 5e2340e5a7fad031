//! Benchmark runner for the sharedtf two-party protocols.

pub mod config;
pub mod report;
pub mod workload;

pub use config::{BenchConfig, Protocol, Variant, CONFIG_VERSION};
pub use report::{ratio_table, BenchReport, Format, RatioRow};
pub use workload::{run_local, Role};
