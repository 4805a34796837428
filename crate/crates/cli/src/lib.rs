//! Command-line pipeline around [`rpys_core`]: configuration handling,
//! stage orchestration and CSV export. The binary lives in `main.rs`; the
//! pieces are a library so integration tests can drive them directly.

pub mod config;
pub mod export;
pub mod pipeline;

pub use config::PipelineConfig;
pub use pipeline::{info, run, spectrum, InfoReport, PipelineError, RunSummary};
