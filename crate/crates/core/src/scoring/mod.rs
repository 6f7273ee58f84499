//! Alignment against references, term-weighted-value metrics, and the
//! document-ranking diagnostics.

mod align;
pub mod diag;
mod metrics;
mod spearman;
pub mod sweep;

pub use align::{align, AlignmentResult, HitLabel, KeywordCounts, PreparedAlignment};
pub use diag::{
    correlations, doc_rank_curves, ranked_doc_stats, run_diagnostics, write_curve_csv,
    CorrelationReport, CurveKind, CurvePoint, Diagnostics, DocStat,
};
pub use metrics::{
    atwv, keyword_rates, mtwv, score_candidates, write_keyword_detail, write_report_json,
    KeywordRates, KeywordScore, Mtwv, ScoreReport, ScoringConfig, DEFAULT_DELTA,
};
pub use spearman::{average_ranks, spearman};
pub use sweep::{alpha_sweep, best_alpha, uniform_grid, write_sweep_csv, SweepRow};
