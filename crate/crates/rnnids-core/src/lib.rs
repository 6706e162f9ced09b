//! Core library for learning byte-level generative models of encoded attack
//! payloads and NIDS signatures, generating mutants and synthetic
//! signatures from them, synthesizing labeled traffic datasets by overlay,
//! and measuring how a ruleset change moves a detector's false-positive and
//! false-negative rates.
//!
//! Subsystems:
//!
//! * [`seqmodel`] — from-scratch multi-layer LSTM byte model: training,
//!   sampling, versioned on-disk format.
//! * [`simmetrics`] — Levenshtein and normalized Smith-Waterman similarity
//!   plus pairwise similarity-matrix reports.
//! * [`signatures`] — signature-file parsing, regex-to-DFA compilation,
//!   payload matching, inverse (string-from-regex) generation, union, and
//!   repair of raw model-emitted patterns.
//! * [`payloads`] — toy polymorphic XOR encoder corpora and grayscale
//!   spectral renderings.
//! * [`dataset`] — pcap ingestion and overlay construction of labeled
//!   benign/malicious flow datasets.
//! * [`detector`] — minimal signature-matching engine and the FP/FN
//!   evaluation harness with paired before/after experiments.
//!
//! With the default `parallel` feature the data-parallel loops
//! (similarity-matrix cells, flow scanning, corpus variants, per-rule flow
//! synthesis) run on rayon; without it they fall back to the sequential
//! implementations, which stay public (`*_seq`) for direct comparison.

pub mod dataset;
pub mod detector;
pub mod payloads;
pub mod seqmodel;
pub mod signatures;
pub mod simmetrics;

pub use dataset::DatasetError;
pub use detector::DetectorError;
pub use payloads::PayloadError;
pub use seqmodel::SeqModelError;
pub use signatures::SignatureError;
pub use simmetrics::SimMetricsError;

/// Any error produced by a core subsystem.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    SeqModel(#[from] SeqModelError),
    #[error(transparent)]
    SimMetrics(#[from] SimMetricsError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

impl Error {
    /// Stable machine-readable name of the underlying error variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SeqModel(e) => e.name(),
            Error::SimMetrics(e) => e.name(),
            Error::Signature(e) => e.name(),
            Error::Payload(e) => e.name(),
            Error::Dataset(e) => e.name(),
            Error::Detector(e) => e.name(),
        }
    }
}
