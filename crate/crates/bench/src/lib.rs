//! Benchmark harness for the `mpomps` library: synthetic ensembles, method
//! sweeps, tabular output and the acceptance checks.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{BenchConfig, Format, Instance, Method, Reference, Sweep};
pub use error::{BenchError, Result};
pub use run::{run_bench, BenchRecord, BenchRun};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/benchmarks.md")]
mod book_benchmarks {}
