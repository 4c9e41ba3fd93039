//! Benchmark harness for the `htfmlp` forecasters: synthetic series, CSV
//! input, experiment configuration, grid execution and report rendering.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod report;
pub mod synthetic;

pub use config::{ExperimentConfig, SeriesData, SeriesSource};
pub use error::{BenchError, Result};
pub use experiment::{run_cell, run_experiment};
pub use report::{Cell, CellOutcome, Report};
pub use synthetic::{generate_synthetic, Preset, SyntheticConfig};
