//! Relationship between document ranking weights and detection quality.
//!
//! For each keyword the documents holding its hits are ordered by weight;
//! each document's precision (correct hits / hits) and recall (correct hits /
//! true occurrences) is then averaged across keywords rank by rank.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::align::{AlignmentResult, HitLabel};
use super::spearman::spearman;
use crate::corpus_io::{Candidate, RefOccurrence};
use crate::error::{Error, Result};
use crate::rescore::{document_ranking_weights, sum_document_scores, DocWeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Precision and recall of the document at rank k alone.
    PerRank,
    /// Precision and recall of the top-k documents pooled.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocStat {
    pub kw_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub weight: f64,
    pub hits: usize,
    pub correct: usize,
    pub n_true: usize,
}

impl DocStat {
    pub fn precision(&self) -> f64 {
        self.correct as f64 / self.hits as f64
    }

    pub fn recall(&self) -> f64 {
        self.correct as f64 / self.n_true as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rank: usize,
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub keywords: usize,
}

/// Per-(keyword, document) hit statistics in rank order. `labels` must
/// follow `candidates`. Keywords without references are left out since
/// their recall is undefined.
pub fn ranked_doc_stats(
    candidates: &[Candidate],
    weight_tables: &BTreeMap<String, DocWeightTable>,
    alignment: &AlignmentResult,
) -> Vec<DocStat> {
    assert_eq!(
        candidates.len(),
        alignment.labels.len(),
        "labels must follow candidates"
    );
    let mut tallies: BTreeMap<(&str, &str), (usize, usize)> = BTreeMap::new();
    for (c, label) in candidates.iter().zip(&alignment.labels) {
        let t = tallies.entry((&c.kw_id, &c.doc_id)).or_default();
        t.0 += 1;
        if *label == HitLabel::Correct {
            t.1 += 1;
        }
    }
    let mut out = Vec::new();
    for (kw, table) in weight_tables {
        let n_true = alignment.per_keyword.get(kw).map_or(0, |c| c.n_true);
        if n_true == 0 {
            continue;
        }
        for (rank0, (doc, weight)) in table.ranked_docs().into_iter().enumerate() {
            let (hits, correct) = tallies.get(&(kw.as_str(), doc)).copied().unwrap_or((0, 0));
            if hits == 0 {
                continue;
            }
            out.push(DocStat {
                kw_id: kw.clone(),
                doc_id: doc.to_string(),
                rank: rank0 + 1,
                weight,
                hits,
                correct,
                n_true,
            });
        }
    }
    out
}

/// Rank-averaged precision/recall for ranks `1..=max_rank`. At rank k only
/// keywords with at least k ranked documents contribute.
pub fn doc_rank_curves(
    candidates: &[Candidate],
    weight_tables: &BTreeMap<String, DocWeightTable>,
    alignment: &AlignmentResult,
    max_rank: usize,
    kind: CurveKind,
) -> Vec<CurvePoint> {
    let stats = ranked_doc_stats(candidates, weight_tables, alignment);
    let mut by_kw: BTreeMap<&str, Vec<&DocStat>> = BTreeMap::new();
    for s in &stats {
        by_kw.entry(&s.kw_id).or_default().push(s);
    }
    let mut sums = vec![(0.0, 0.0, 0usize); max_rank];
    for docs in by_kw.values() {
        let (mut hits, mut correct) = (0usize, 0usize);
        for (k, s) in docs.iter().take(max_rank).enumerate() {
            let (p, r) = match kind {
                CurveKind::PerRank => (s.precision(), s.recall()),
                CurveKind::Cumulative => {
                    hits += s.hits;
                    correct += s.correct;
                    (
                        correct as f64 / hits as f64,
                        correct as f64 / s.n_true as f64,
                    )
                }
            };
            sums[k].0 += p;
            sums[k].1 += r;
            sums[k].2 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .take_while(|(_, s)| s.2 > 0)
        .map(|(k, (p, r, n))| CurvePoint {
            rank: k + 1,
            avg_precision: p / n as f64,
            avg_recall: r / n as f64,
            keywords: n,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    /// Number of (keyword, document) pairs pooled.
    pub pairs: usize,
    /// Spearman rho of document weight against document precision.
    pub weight_precision_rho: Option<f64>,
    /// Spearman rho of document weight against document recall.
    pub weight_recall_rho: Option<f64>,
    /// Spearman rho of rank position against the averaged precision curve.
    pub rank_precision_rho: Option<f64>,
    /// Spearman rho of rank position against the averaged recall curve.
    pub rank_recall_rho: Option<f64>,
}

fn defined(rho: Result<f64>) -> Option<f64> {
    rho.ok()
}

pub fn correlations(stats: &[DocStat], curve: &[CurvePoint]) -> CorrelationReport {
    let w: Vec<f64> = stats.iter().map(|s| s.weight).collect();
    let p: Vec<f64> = stats.iter().map(DocStat::precision).collect();
    let r: Vec<f64> = stats.iter().map(DocStat::recall).collect();
    let ranks: Vec<f64> = curve.iter().map(|c| c.rank as f64).collect();
    let cp: Vec<f64> = curve.iter().map(|c| c.avg_precision).collect();
    let cr: Vec<f64> = curve.iter().map(|c| c.avg_recall).collect();
    CorrelationReport {
        pairs: stats.len(),
        weight_precision_rho: defined(spearman(&w, &p)),
        weight_recall_rho: defined(spearman(&w, &r)),
        rank_precision_rho: defined(spearman(&ranks, &cp)),
        rank_recall_rho: defined(spearman(&ranks, &cr)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub weight_tables: BTreeMap<String, DocWeightTable>,
    pub curve: Vec<CurvePoint>,
    pub correlations: CorrelationReport,
}

/// Weight tables, rank curves and correlations for a candidate list. Every
/// candidate is aligned as a hypothesis so that each ranked document has a
/// defined precision.
pub fn run_diagnostics(
    candidates: &[Candidate],
    refs: &[RefOccurrence],
    delta: f64,
    max_rank: usize,
    kind: CurveKind,
) -> Result<Diagnostics> {
    let mut by_kw: BTreeMap<&str, Vec<Candidate>> = BTreeMap::new();
    for c in candidates {
        by_kw.entry(&c.kw_id).or_default().push(c.clone());
    }
    let mut weight_tables = BTreeMap::new();
    for (kw, group) in by_kw {
        let sums = sum_document_scores(&group)?;
        weight_tables.insert(kw.to_string(), document_ranking_weights(kw, &sums)?);
    }
    let alignment = super::align(candidates, refs, delta);
    let stats = ranked_doc_stats(candidates, &weight_tables, &alignment);
    let curve = doc_rank_curves(candidates, &weight_tables, &alignment, max_rank, kind);
    let correlations = correlations(&stats, &curve);
    Ok(Diagnostics {
        weight_tables,
        curve,
        correlations,
    })
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(out, "rank,avg_precision,avg_recall")?;
        for p in curve {
            writeln!(out, "{},{},{}", p.rank, p.avg_precision, p.avg_recall)?;
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
