//! Spoken term detection over confusion-network transcriptions.
//!
//! The crate covers the whole batch flow: keyword search on an inverted index
//! of confusion networks ([`index`]), confidence re-estimation from
//! per-keyword document ranking weights ([`rescore`]), threshold decisions
//! ([`decision`]), term-weighted-value scoring with document-rank diagnostics
//! ([`scoring`]), and a synthetic corpus generator ([`synth`]) for desk-scale
//! experiments. [`cli`] exposes all of it as the `drstd` binary.

pub mod cli;
pub mod corpus_io;
pub mod decision;
pub mod error;
pub mod index;
pub mod manifest;
pub mod pipeline;
pub mod rescore;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
