//! Stage composition shared by the `pipeline`, `sweep` and single-stage
//! subcommands.
//!
//! Stage outputs are quantized exactly as a write/read cycle through the
//! candidate TSV would quantize them, so running the whole pipeline in
//! memory gives the same bytes as chaining the subcommands through files.

use std::collections::BTreeMap;

use crate::corpus_io::{
    quantize_score, sort_candidates, Candidate, ConfusionNetworkDoc, KeywordEntry, RefOccurrence,
};
use crate::decision::{apply_decisions, DecisionPolicy};
use crate::error::Result;
use crate::index::{build_index, dedup_overlaps, search_all, InvertedIndex};
use crate::rescore::{rescore_candidates, DocWeightTable, RescoreConfig};
use crate::scoring::{score_candidates, ScoreReport, ScoringConfig};

/// Round scores as the candidate TSV does and restore canonical order.
pub fn quantize_stage(mut candidates: Vec<Candidate>) -> Vec<Candidate> {
    for c in &mut candidates {
        c.score = quantize_score(c.score);
    }
    sort_candidates(&mut candidates);
    candidates
}

pub fn search_stage(
    index: &InvertedIndex,
    corpus: &[ConfusionNetworkDoc],
    keywords: &[KeywordEntry],
    dedup: bool,
) -> Vec<Candidate> {
    let hits = search_all(index, corpus, keywords);
    let hits = if dedup { dedup_overlaps(&hits) } else { hits };
    quantize_stage(hits)
}

pub fn rescore_stage(
    candidates: &[Candidate],
    config: &RescoreConfig,
) -> Result<(Vec<Candidate>, BTreeMap<String, DocWeightTable>)> {
    let (rescored, tables) = rescore_candidates(candidates, config)?;
    Ok((quantize_stage(rescored), tables))
}

#[derive(Debug, Clone)]
pub struct AlphaRun {
    pub rescored: Vec<Candidate>,
    pub weight_tables: BTreeMap<String, DocWeightTable>,
    pub decided: Vec<Candidate>,
    pub report: ScoreReport,
}

/// Rescore → decide → score for one interpolation coefficient.
pub fn evaluate_alpha(
    candidates: &[Candidate],
    refs: &[RefOccurrence],
    rescore: &RescoreConfig,
    policy: &DecisionPolicy,
    scoring: &ScoringConfig,
) -> Result<AlphaRun> {
    let (rescored, weight_tables) = rescore_stage(candidates, rescore)?;
    let decided = apply_decisions(&rescored, policy);
    let report = score_candidates(&decided, refs, scoring)?;
    Ok(AlphaRun {
        rescored,
        weight_tables,
        decided,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub rescore: RescoreConfig,
    pub policy: DecisionPolicy,
    pub scoring: ScoringConfig,
    pub dedup: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub candidates: Vec<Candidate>,
    pub run: AlphaRun,
}

/// index → search → rescore → decide → score.
pub fn run_pipeline(
    corpus: &[ConfusionNetworkDoc],
    keywords: &[KeywordEntry],
    refs: &[RefOccurrence],
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    let index = build_index(corpus);
    let candidates = search_stage(&index, corpus, keywords, config.dedup);
    let run = evaluate_alpha(
        &candidates,
        refs,
        &config.rescore,
        &config.policy,
        &config.scoring,
    )?;
    Ok(PipelineOutput { candidates, run })
}
