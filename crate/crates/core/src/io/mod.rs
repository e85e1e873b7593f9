//! Data ingestion, configuration, simulation, and output files.

pub mod app;
pub mod config;
pub mod ingest;
pub mod report;
pub mod simulate;

pub use config::{DataConfig, KernelTag, OutputConfig, RunConfig};
pub use ingest::{read_categorical, read_continuous, Dataset, Observations};
