//! On-disk formats and the record types that flow through the pipeline.
//!
//! Confusion-network corpora are JSON-lines (one document per line); every
//! flat table (keywords, references, candidates) is TSV. Lines starting with
//! `#` and blank lines are ignored in all TSV readers.

mod cn;
mod tables;

use std::cmp::Ordering;
use std::fmt;

use unicode_normalization::UnicodeNormalization;

pub use cn::{parse_cn_corpus, read_cn_corpus, write_cn_corpus, POSTERIOR_SUM_TOLERANCE};
pub use tables::{
    format_score, parse_candidates, parse_keyword_list, parse_occurrence_table, parse_references,
    quantize_score, read_candidates, read_keyword_list, read_references, write_candidates,
    write_keyword_list, write_references, OccurrenceKind, OccurrenceTable,
};

/// Reserved token for a null (deletion) arc.
pub const EPS: &str = "<eps>";

/// NFC-normalize and lowercase a token. Applied to CN arcs and keyword text alike.
pub fn normalize_token(raw: &str) -> String {
    raw.nfc().collect::<String>().to_lowercase()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordArc {
    pub token: String,
    pub posterior: f64,
}

impl WordArc {
    pub fn is_eps(&self) -> bool {
        self.token == EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub start: f64,
    pub duration: f64,
    pub arcs: Vec<WordArc>,
}

impl Slot {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn eps_arc(&self) -> Option<&WordArc> {
        self.arcs.iter().find(|a| a.is_eps())
    }
}

/// One transcribed document: a linear sequence of time slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionNetworkDoc {
    pub doc_id: String,
    pub slots: Vec<Slot>,
}

impl ConfusionNetworkDoc {
    /// End time of the last slot, or 0 for an empty document.
    pub fn duration(&self) -> f64 {
        self.slots.iter().map(Slot::end).fold(0.0, f64::max)
    }
}

/// Total speech duration of a corpus: the sum of per-document end times.
pub fn corpus_duration(corpus: &[ConfusionNetworkDoc]) -> f64 {
    corpus.iter().map(ConfusionNetworkDoc::duration).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordEntry {
    pub kw_id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefOccurrence {
    pub kw_id: String,
    pub doc_id: String,
    pub start: f64,
    pub duration: f64,
}

impl RefOccurrence {
    pub fn midpoint(&self) -> f64 {
        self.start + self.duration / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Yes,
    No,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Yes => "YES",
            Decision::No => "NO",
        })
    }
}

/// One hypothesized keyword occurrence with its confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub kw_id: String,
    pub doc_id: String,
    pub start: f64,
    pub duration: f64,
    pub score: f64,
    pub decision: Option<Decision>,
}

impl Candidate {
    pub fn new(kw_id: &str, doc_id: &str, start: f64, duration: f64, score: f64) -> Self {
        Candidate {
            kw_id: kw_id.to_string(),
            doc_id: doc_id.to_string(),
            start,
            duration,
            score,
            decision: None,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn midpoint(&self) -> f64 {
        self.start + self.duration / 2.0
    }

    /// A hypothesis counts as a detection unless explicitly marked NO.
    pub fn is_detection(&self) -> bool {
        self.decision != Some(Decision::No)
    }
}

/// Canonical candidate order: (kw_id, doc_id, start), then duration and
/// score so that the order is total.
pub fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.kw_id
        .cmp(&b.kw_id)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
        .then_with(|| a.start.total_cmp(&b.start))
        .then_with(|| a.duration.total_cmp(&b.duration))
        .then_with(|| b.score.total_cmp(&a.score))
}

pub fn sort_candidates(candidates: &mut [Candidate]) {
    candidates.sort_by(candidate_order);
}
