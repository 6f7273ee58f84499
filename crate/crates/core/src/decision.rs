//! YES/NO decisions from scored candidates.
//!
//! The keyword-specific threshold treats every score as the probability that
//! the hit is real. With `n = sum of scores` standing in for the number of
//! true occurrences, accepting a hit of score `p` changes the expected
//! term-weighted value by `p / n - beta * (1 - p) / (T - n)`, which is
//! non-negative exactly when `p >= beta * n / (T + (beta - 1) * n)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus_io::{candidate_order, Candidate, Decision};
use crate::error::{Error, Result};

/// Cost ratio of the NIST STD 2006 evaluation.
pub const DEFAULT_BETA: f64 = 999.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    Global,
    Kst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecisionPolicy {
    pub mode: DecisionMode,
    pub global_threshold: f64,
    pub beta: f64,
    pub trial_seconds: f64,
}

impl DecisionPolicy {
    pub fn global(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!(
                "threshold {threshold} outside [0, 1]"
            )));
        }
        Ok(DecisionPolicy {
            mode: DecisionMode::Global,
            global_threshold: threshold,
            beta: DEFAULT_BETA,
            trial_seconds: 1.0,
        })
    }

    pub fn kst(beta: f64, trial_seconds: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta {beta} must be positive")));
        }
        if !(trial_seconds > 0.0 && trial_seconds.is_finite()) {
            return Err(Error::Config(format!(
                "trial duration {trial_seconds} must be positive"
            )));
        }
        Ok(DecisionPolicy {
            mode: DecisionMode::Kst,
            global_threshold: 0.5,
            beta,
            trial_seconds,
        })
    }
}

/// Keyword-specific threshold for one keyword's candidates; 1 when empty.
pub fn kst_threshold(candidates: &[Candidate], policy: &DecisionPolicy) -> f64 {
    if candidates.is_empty() {
        return 1.0;
    }
    let mut sorted: Vec<&Candidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| candidate_order(a, b));
    let expected_true: f64 = sorted.iter().map(|c| c.score).sum();
    threshold_for_expected_count(expected_true, policy.beta, policy.trial_seconds)
}

/// `beta * n / (T + (beta - 1) * n)`.
pub fn threshold_for_expected_count(expected_true: f64, beta: f64, trial_seconds: f64) -> f64 {
    beta * expected_true / (trial_seconds + (beta - 1.0) * expected_true)
}

/// Set the decision field of every candidate. Order and all other fields
/// are preserved.
pub fn apply_decisions(candidates: &[Candidate], policy: &DecisionPolicy) -> Vec<Candidate> {
    let thresholds: BTreeMap<&str, f64> = match policy.mode {
        DecisionMode::Global => BTreeMap::new(),
        DecisionMode::Kst => {
            let mut by_kw: BTreeMap<&str, Vec<Candidate>> = BTreeMap::new();
            for c in candidates {
                by_kw.entry(&c.kw_id).or_default().push(c.clone());
            }
            by_kw
                .into_iter()
                .map(|(kw, group)| (kw, kst_threshold(&group, policy)))
                .collect()
        }
    };
    candidates
        .iter()
        .map(|c| {
            let threshold = match policy.mode {
                DecisionMode::Global => policy.global_threshold,
                DecisionMode::Kst => thresholds[c.kw_id.as_str()],
            };
            Candidate {
                decision: Some(if c.score >= threshold {
                    Decision::Yes
                } else {
                    Decision::No
                }),
                ..c.clone()
            }
        })
        .collect()
}
