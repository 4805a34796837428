//! Core library for landmark-publication detection over Web of Science
//! plain-text exports.
//!
//! The crate is organised as a pipeline of four stages:
//!
//! 1. [`ingest`] — stream-parse tagged-field WoS exports into source records
//!    and aggregate their cited-reference strings into a variant table,
//!    applying the citing-year (PY) and reference-year (RPY) admission
//!    windows.
//! 2. [`dedup`] — cluster spelling variants of the same cited reference by
//!    normalised edit-distance similarity with volume/page/DOI gates, then
//!    merge each cluster into one canonical entry with summed counts.
//! 3. [`matrix`] — build the cited-reference × citing-year count structure
//!    and serve window-smoothed counts.
//! 4. [`indicators`] — per-citing-year top-percentile membership, the
//!    N_TOPp+ landmark indicator, and the RPYS median-deviation spectrum.
//!
//! All membership decisions use integer or exact rational arithmetic (see
//! [`Fraction`]); no floating point enters a threshold comparison, so runs
//! are reproducible bit-for-bit across platforms.

pub mod dedup;
pub mod fraction;
pub mod indicators;
pub mod ingest;
pub mod matrix;

pub use fraction::Fraction;

use thiserror::Error;

/// Errors shared across the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying read failed; `offset` is the byte position reached in the
    /// input stream.
    #[error("I/O error at byte offset {offset}: {source}")]
    Io {
        offset: u64,
        #[source]
        source: std::io::Error,
    },

    /// A ratio or statistic was requested over zero cited references.
    #[error("no cited references")]
    NoCitedReferences,

    /// A matrix was requested over zero merged cited references.
    #[error("empty corpus")]
    EmptyCorpus,
}

pub type Result<T> = std::result::Result<T, Error>;
