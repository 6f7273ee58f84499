use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::align::{AlignmentResult, KeywordCounts, PreparedAlignment};
use crate::corpus_io::{Candidate, RefOccurrence};
use crate::decision::DEFAULT_BETA;
use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoringConfig {
    pub beta: f64,
    pub trial_seconds: f64,
    pub delta: f64,
}

impl ScoringConfig {
    pub fn new(beta: f64, trial_seconds: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta {beta} must be positive")));
        }
        if !(trial_seconds > 0.0 && trial_seconds.is_finite()) {
            return Err(Error::Config(format!(
                "trial duration {trial_seconds} must be positive"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!("delta {delta} must be positive")));
        }
        Ok(ScoringConfig {
            beta,
            trial_seconds,
            delta,
        })
    }

    pub fn with_trial_seconds(trial_seconds: f64) -> Result<Self> {
        Self::new(DEFAULT_BETA, trial_seconds, DEFAULT_DELTA)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeywordRates {
    pub n_true: usize,
    pub p_miss: f64,
    pub p_fa: f64,
}

/// Miss and false-alarm probabilities for every keyword with references.
pub fn keyword_rates(
    alignment: &AlignmentResult,
    trial_seconds: f64,
) -> Result<BTreeMap<String, KeywordRates>> {
    rates_from_counts(
        alignment.per_keyword.iter().map(|(k, c)| (k.as_str(), *c)),
        trial_seconds,
    )
}

fn rates_from_counts<'a>(
    counts: impl Iterator<Item = (&'a str, KeywordCounts)>,
    trial_seconds: f64,
) -> Result<BTreeMap<String, KeywordRates>> {
    let mut out = BTreeMap::new();
    for (kw, c) in counts {
        if c.n_true == 0 {
            continue;
        }
        if trial_seconds <= c.n_true as f64 {
            return Err(Error::TrialTooShort {
                kw_id: kw.to_string(),
                n_true: c.n_true,
                trial_seconds,
            });
        }
        out.insert(
            kw.to_string(),
            KeywordRates {
                n_true: c.n_true,
                p_miss: 1.0 - c.n_correct as f64 / c.n_true as f64,
                p_fa: c.n_fa as f64 / (trial_seconds - c.n_true as f64),
            },
        );
    }
    Ok(out)
}

/// One minus the mean over keywords of `p_miss + beta * p_fa`.
pub fn atwv(rates: &BTreeMap<String, KeywordRates>, beta: f64) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::NoScoreableKeywords);
    }
    let cost: f64 = rates.values().map(|r| r.p_miss + beta * r.p_fa).sum();
    Ok(1.0 - cost / rates.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mtwv {
    pub threshold: f64,
    pub value: f64,
}

/// Best term-weighted value over every global threshold.
///
/// Every distinct score is tried as a cut point (accept `score >= t`), plus
/// a cut just above the largest score that accepts nothing. Among equal
/// values the highest threshold is reported.
pub fn mtwv(
    candidates: &[Candidate],
    refs: &[RefOccurrence],
    config: &ScoringConfig,
) -> Result<Mtwv> {
    let prep = PreparedAlignment::new(candidates, refs, config.delta);
    let twv_at = |threshold: f64| -> Result<f64> {
        let counts = prep.counts_for(|i| candidates[i].score >= threshold);
        let rates = rates_from_counts(
            prep.keywords().iter().map(String::as_str).zip(counts),
            config.trial_seconds,
        )?;
        atwv(&rates, config.beta)
    };
    let mut cuts: Vec<f64> = candidates.iter().map(|c| c.score).collect();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let above_all = cuts.first().map_or(1.0, |&m| next_up(m));
    let mut best = Mtwv {
        threshold: above_all,
        value: twv_at(above_all)?,
    };
    for t in cuts {
        let value = twv_at(t)?;
        if value > best.value {
            best = Mtwv {
                threshold: t,
                value,
            };
        }
    }
    Ok(best)
}

fn next_up(x: f64) -> f64 {
    if x >= 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        x + f64::EPSILON
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordScore {
    pub kw_id: String,
    pub n_true: usize,
    pub n_correct: usize,
    pub n_fa: usize,
    pub n_miss: usize,
    pub p_miss: f64,
    pub p_fa: f64,
    pub twv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub atwv: f64,
    pub mean_p_miss: f64,
    pub mean_p_fa: f64,
    pub num_keywords: usize,
    pub num_hypotheses: usize,
    pub mtwv: Mtwv,
    pub config: ScoringConfig,
    pub keywords: Vec<KeywordScore>,
}

/// Score a decided candidate list: detections are the rows not marked NO;
/// MTWV is computed from the scores of all rows.
pub fn score_candidates(
    candidates: &[Candidate],
    refs: &[RefOccurrence],
    config: &ScoringConfig,
) -> Result<ScoreReport> {
    let detections: Vec<Candidate> = candidates
        .iter()
        .filter(|c| c.is_detection())
        .cloned()
        .collect();
    let alignment = super::align(&detections, refs, config.delta);
    let rates = keyword_rates(&alignment, config.trial_seconds)?;
    let value = atwv(&rates, config.beta)?;
    let n = rates.len() as f64;
    let keywords = rates
        .iter()
        .map(|(kw, r)| {
            let c = alignment.per_keyword[kw];
            KeywordScore {
                kw_id: kw.clone(),
                n_true: c.n_true,
                n_correct: c.n_correct,
                n_fa: c.n_fa,
                n_miss: c.n_miss,
                p_miss: r.p_miss,
                p_fa: r.p_fa,
                twv: 1.0 - (r.p_miss + config.beta * r.p_fa),
            }
        })
        .collect();
    Ok(ScoreReport {
        atwv: value,
        mean_p_miss: rates.values().map(|r| r.p_miss).sum::<f64>() / n,
        mean_p_fa: rates.values().map(|r| r.p_fa).sum::<f64>() / n,
        num_keywords: rates.len(),
        num_hypotheses: detections.len(),
        mtwv: mtwv(candidates, refs, config)?,
        config: *config,
        keywords,
    })
}

pub fn write_report_json(path: &Path, report: &ScoreReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_keyword_detail(path: &Path, report: &ScoreReport) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(
            out,
            "# kw_id\tn_true\tn_correct\tn_fa\tn_miss\tp_miss\tp_fa\ttwv"
        )?;
        for k in &report.keywords {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                k.kw_id, k.n_true, k.n_correct, k.n_fa, k.n_miss, k.p_miss, k.p_fa, k.twv
            )?;
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
