use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::ScoringConfig;
use crate::corpus_io::{Candidate, RefOccurrence};
use crate::decision::DecisionPolicy;
use crate::error::{Error, Result};
use crate::pipeline::evaluate_alpha;
use crate::rescore::RescoreConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub atwv: f64,
    pub mean_p_miss: f64,
    pub mean_p_fa: f64,
}

/// Grid `0, step, 2*step, ..., 1` with values rounded to 1e-9.
pub fn uniform_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n)
        .map(|i| ((i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

/// Rescore, decide and score once per interpolation coefficient.
pub fn alpha_sweep(
    candidates: &[Candidate],
    refs: &[RefOccurrence],
    grid: &[f64],
    policy: &DecisionPolicy,
    scoring: &ScoringConfig,
) -> Result<Vec<SweepRow>> {
    let configs = grid
        .iter()
        .map(|&a| RescoreConfig::new(a))
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .map(|cfg| {
            let run = evaluate_alpha(candidates, refs, cfg, policy, scoring)?;
            Ok(SweepRow {
                alpha: cfg.alpha(),
                atwv: run.report.atwv,
                mean_p_miss: run.report.mean_p_miss,
                mean_p_fa: run.report.mean_p_fa,
            })
        })
        .collect()
}

/// The row with the highest ATWV; the smallest alpha wins ties.
pub fn best_alpha(rows: &[SweepRow]) -> Option<SweepRow> {
    rows.iter().copied().fold(None, |best, r| match best {
        Some(b) if b.atwv >= r.atwv => Some(b),
        _ => Some(r),
    })
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(out, "alpha,atwv,mean_pmiss,mean_pfa")?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.alpha, r.atwv, r.mean_p_miss, r.mean_p_fa
            )?;
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
