//! Benchmark harness: flat key-value configs, repeated seeded runs, CSV
//! traces and aggregates, manifests and growth-rate diagnostics.

pub mod config;
pub mod diagnostics;
pub mod output;
pub mod runner;

pub use config::{BenchConfig, Variant};
pub use diagnostics::{diagnostics_report, DiagnosticsReport};
pub use output::Manifest;
pub use runner::{build_target, rerun_manifest, run_benchmark, run_diagnostics, BenchOutcome, Target};
