//! `drstd` command line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::corpus_io::{
    corpus_duration, parse_candidates, parse_cn_corpus, parse_keyword_list, parse_references,
    write_candidates,
};
use crate::decision::{apply_decisions, DecisionPolicy, DEFAULT_BETA};
use crate::error::{Error, Result};
use crate::index::{build_index, corpus_fingerprint, load_index, save_index};
use crate::manifest::RunManifest;
use crate::pipeline::{evaluate_alpha, rescore_stage, search_stage};
use crate::rescore::{write_weight_tables, RescoreConfig};
use crate::scoring::{
    alpha_sweep, best_alpha, run_diagnostics, score_candidates, uniform_grid, write_curve_csv,
    write_keyword_detail, write_report_json, write_sweep_csv, CurveKind, ScoringConfig,
    DEFAULT_DELTA,
};
use crate::synth::{generate, write_synth, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "drstd",
    version,
    about = "Spoken term detection with document-ranking confidence re-estimation"
)]
pub struct Cli {
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Only log warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an inverted index cache for a confusion-network corpus.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search keywords and write the one-pass candidate list.
    Search {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        keywords: PathBuf,
        /// Index cache from `drstd index`; rebuilt from the corpus if absent.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Keep overlapping hits of the same keyword and document.
        #[arg(long)]
        no_dedup: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-estimate candidate confidences with document ranking weights.
    Rescore {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Interpolation coefficient in [0, 1].
        #[arg(long)]
        alpha: f64,
        /// Also write the per-keyword weight tables (TSV).
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// Mark each candidate YES or NO.
    Decide {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        decision: DecisionArgs,
    },
    /// Score decided hypotheses against references.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        refs: PathBuf,
        #[arg(long)]
        trial_seconds: f64,
        #[command(flatten)]
        cost: CostArgs,
        /// Report JSON.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Per-keyword detail TSV.
        #[arg(long)]
        detail_out: Option<PathBuf>,
    },
    /// ATWV as a function of the interpolation coefficient.
    Sweep {
        #[arg(long)]
        cands: PathBuf,
        #[arg(long = "ref")]
        refs: PathBuf,
        /// Comma-separated coefficients; default 0, 0.05, ..., 1.
        #[arg(long, value_delimiter = ',')]
        alpha_grid: Option<Vec<f64>>,
        #[command(flatten)]
        decision: DecisionArgs,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Document-rank precision/recall curves and Spearman correlations.
    Diag {
        #[arg(long)]
        cands: PathBuf,
        #[arg(long = "ref")]
        refs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = 20)]
        max_rank: usize,
        /// Pool the top-k documents instead of reporting rank k alone.
        #[arg(long)]
        cumulative: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a synthetic corpus with planted topic burstiness.
    #[command(long_about = SYNTH_HELP)]
    Synth {
        #[arg(long, default_value_t = 200)]
        docs: usize,
        #[arg(long, default_value_t = 150)]
        slots: usize,
        #[arg(long, default_value_t = 50)]
        keywords: usize,
        #[arg(long, default_value_t = 2000)]
        vocab: usize,
        #[arg(long, default_value_t = 5)]
        docs_per_topic: usize,
        #[arg(long, default_value_t = 0.9)]
        topic_affinity: f64,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// search → rescore → decide → score in one invocation.
    Pipeline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        keywords: PathBuf,
        #[arg(long = "ref")]
        refs: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        decision: DecisionArgs,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long)]
        no_dedup: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

const SYNTH_HELP: &str = "\
Generate a synthetic corpus with planted topic burstiness.

Writes corpus.jsonl, keywords.tsv and refs.tsv into --out. Everything is
drawn from one ChaCha8 stream seeded with --seed, so equal flags give
byte-identical files.

Model:
  * Keywords use reserved tokens (about one in five has two tokens); filler
    tokens follow Zipf weights 1/rank.
  * Documents form topics of --docs-per-topic consecutive documents. Each
    keyword has a home topic and 4-12 true occurrences; a --topic-affinity
    share of them (fraction rounded by a coin flip) lands in home documents,
    the rest uniformly in documents outside the home topic.
  * Slots last 0.20-0.60 s. A slot holds its true token plus Binomial(3,
    noise) competitors: <eps> with probability 0.1, a keyword token with
    probability 0.05 (in 80% of cases one homed in the slot's topic), a
    filler token otherwise.
  * Posteriors are Gamma draws normalized to one: shape 1 + 3(1 - noise) for
    the true token, 1 for competitors. With --noise 0 each slot holds only its
    true token at posterior 1.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DecisionModeArg {
    Global,
    Kst,
}

#[derive(Debug, Args)]
struct DecisionArgs {
    #[arg(long, value_enum, default_value_t = DecisionModeArg::Kst)]
    decision: DecisionModeArg,
    /// Threshold for --decision global.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Total speech duration T in seconds (pipeline: defaults to the corpus duration).
    #[arg(long)]
    trial_seconds: Option<f64>,
}

impl DecisionArgs {
    fn trial_seconds(&self) -> Result<f64> {
        self.trial_seconds
            .ok_or_else(|| Error::Config("--trial-seconds is required".into()))
    }

    fn policy(&self, trial_seconds: Option<f64>) -> Result<DecisionPolicy> {
        match self.decision {
            DecisionModeArg::Global => {
                let mut p = DecisionPolicy::global(self.threshold)?;
                p.beta = self.beta;
                if let Some(t) = trial_seconds {
                    p.trial_seconds = t;
                }
                Ok(p)
            }
            DecisionModeArg::Kst => {
                let t = trial_seconds.ok_or_else(|| {
                    Error::Config("--trial-seconds is required for --decision kst".into())
                })?;
                DecisionPolicy::kst(self.beta, t)
            }
        }
    }

    fn record(&self, m: &mut RunManifest, policy: &DecisionPolicy, trial_seconds: Option<f64>) {
        m.config("decision", policy.mode);
        if policy.mode == crate::decision::DecisionMode::Global {
            m.config("threshold", policy.global_threshold);
        }
        m.config("beta", policy.beta);
        if let Some(t) = trial_seconds {
            m.config("trial_seconds", t);
        }
    }
}

#[derive(Debug, Args)]
struct CostArgs {
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

/// Run with the given argv (including the program name) and return the exit
/// code: 0 on success, 1 on validation errors, 2 on I/O errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("{first} (see `drstd --help`)");
            return 1;
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Warn
    } else {
        log::LevelFilter::Info
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.jobs);
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Index { corpus, out } => {
            let docs = parse_cn_corpus(&corpus)?;
            let index = build_index(&docs);
            save_index(&out, &index)?;
            info!(
                "indexed {} documents, {} postings, fingerprint {}",
                docs.len(),
                index.posting_count(),
                index.fingerprint()
            );
            let mut m = RunManifest::new("index");
            m.config("fingerprint", index.fingerprint());
            m.input("corpus", &corpus)?;
            m.output("index", &out)?;
            m.write(&parent_dir(&out))
        }

        Command::Search {
            corpus,
            keywords,
            index,
            no_dedup,
            out,
        } => {
            let docs = parse_cn_corpus(&corpus)?;
            let kws = parse_keyword_list(&keywords)?;
            let idx = match &index {
                Some(p) => load_index(p, &corpus_fingerprint(&docs))?,
                None => build_index(&docs),
            };
            let cands = search_stage(&idx, &docs, &kws, !no_dedup);
            write_candidates(&out, &cands)?;
            info!("{} keywords, {} candidates", kws.len(), cands.len());
            let mut m = RunManifest::new("search");
            m.config("dedup", !no_dedup);
            m.input("corpus", &corpus)?;
            m.input("keywords", &keywords)?;
            if let Some(p) = &index {
                m.input("index", p)?;
            }
            m.output("candidates", &out)?;
            m.write(&parent_dir(&out))
        }

        Command::Rescore {
            input,
            out,
            alpha,
            weights_out,
        } => {
            let cfg = RescoreConfig::new(alpha)?;
            let cands = parse_candidates(&input)?;
            let (rescored, tables) = rescore_stage(&cands, &cfg)?;
            write_candidates(&out, &rescored)?;
            let mut m = RunManifest::new("rescore");
            m.config("alpha", alpha);
            m.input("candidates", &input)?;
            m.output("rescored", &out)?;
            if let Some(w) = &weights_out {
                write_weight_tables(w, &tables)?;
                m.output("weights", w)?;
            }
            m.write(&parent_dir(&out))
        }

        Command::Decide {
            input,
            out,
            decision,
        } => {
            let policy = decision.policy(decision.trial_seconds)?;
            let cands = parse_candidates(&input)?;
            let decided = apply_decisions(&cands, &policy);
            write_candidates(&out, &decided)?;
            let yes = decided.iter().filter(|c| c.is_detection()).count();
            info!("{yes} of {} candidates accepted", decided.len());
            let mut m = RunManifest::new("decide");
            decision.record(&mut m, &policy, decision.trial_seconds);
            m.input("candidates", &input)?;
            m.output("decided", &out)?;
            m.write(&parent_dir(&out))
        }

        Command::Score {
            hyp,
            refs,
            trial_seconds,
            cost,
            out,
            detail_out,
        } => {
            let cfg = ScoringConfig::new(cost.beta, trial_seconds, cost.delta)?;
            let hyps = parse_candidates(&hyp)?;
            let references = parse_references(&refs)?;
            let report = score_candidates(&hyps, &references, &cfg)?;
            write_report_json(&out, &report)?;
            info!("ATWV {:.4}, MTWV {:.4}", report.atwv, report.mtwv.value);
            let mut m = RunManifest::new("score");
            m.config("scoring", cfg);
            m.input("hypotheses", &hyp)?;
            m.input("references", &refs)?;
            m.output("report", &out)?;
            if let Some(d) = &detail_out {
                write_keyword_detail(d, &report)?;
                m.output("keyword_detail", d)?;
            }
            m.write(&parent_dir(&out))
        }

        Command::Sweep {
            cands,
            refs,
            alpha_grid,
            decision,
            delta,
            out,
        } => {
            let trial = decision.trial_seconds()?;
            let policy = decision.policy(Some(trial))?;
            let scoring = ScoringConfig::new(decision.beta, trial, delta)?;
            let grid = alpha_grid.unwrap_or_else(|| uniform_grid(0.05));
            let candidates = parse_candidates(&cands)?;
            let references = parse_references(&refs)?;
            let rows = alpha_sweep(&candidates, &references, &grid, &policy, &scoring)?;
            write_sweep_csv(&out, &rows)?;
            if let Some(best) = best_alpha(&rows) {
                info!("best alpha {} (ATWV {:.4})", best.alpha, best.atwv);
            }
            let mut m = RunManifest::new("sweep");
            m.config("alpha_grid", &grid);
            decision.record(&mut m, &policy, Some(trial));
            m.config("delta", delta);
            m.input("candidates", &cands)?;
            m.input("references", &refs)?;
            m.output("sweep", &out)?;
            m.write(&parent_dir(&out))
        }

        Command::Diag {
            cands,
            refs,
            delta,
            max_rank,
            cumulative,
            out_dir,
        } => {
            if delta.is_nan() || delta <= 0.0 {
                return Err(Error::Config(format!("delta {delta} must be positive")));
            }
            let kind = if cumulative {
                CurveKind::Cumulative
            } else {
                CurveKind::PerRank
            };
            let candidates = parse_candidates(&cands)?;
            let references = parse_references(&refs)?;
            let diag = run_diagnostics(&candidates, &references, delta, max_rank, kind)?;
            ensure_dir(&out_dir)?;
            let curve_path = out_dir.join("curves.csv");
            let corr_path = out_dir.join("correlation.json");
            let weights_path = out_dir.join("weights.tsv");
            write_curve_csv(&curve_path, &diag.curve)?;
            let mut text = serde_json::to_string_pretty(&diag.correlations).expect("serializes");
            text.push('\n');
            std::fs::write(&corr_path, text).map_err(|e| Error::io(&corr_path, e))?;
            write_weight_tables(&weights_path, &diag.weight_tables)?;
            info!(
                "spearman weight~precision {:?}, weight~recall {:?}",
                diag.correlations.weight_precision_rho, diag.correlations.weight_recall_rho
            );
            let mut m = RunManifest::new("diag");
            m.config("delta", delta);
            m.config("max_rank", max_rank);
            m.config("curve", kind);
            m.input("candidates", &cands)?;
            m.input("references", &refs)?;
            m.output("curves", &curve_path)?;
            m.output("correlation", &corr_path)?;
            m.output("weights", &weights_path)?;
            m.write(&out_dir)
        }

        Command::Synth {
            docs,
            slots,
            keywords,
            vocab,
            docs_per_topic,
            topic_affinity,
            noise,
            seed,
            out,
        } => {
            let cfg = SynthConfig {
                num_docs: docs,
                slots_per_doc: slots,
                vocab_size: vocab,
                num_keywords: keywords,
                topic_affinity,
                docs_per_topic,
                noise,
                seed,
            };
            let synth = generate(&cfg)?;
            write_synth(&out, &synth)?;
            let duration = corpus_duration(&synth.corpus);
            info!(
                "{} documents, {} keywords, {} references, {duration} s of speech",
                synth.corpus.len(),
                synth.keywords.len(),
                synth.references.len()
            );
            let mut m = RunManifest::new("synth");
            m.config("synth", cfg);
            m.config("trial_seconds", duration);
            m.output("corpus", &out.join("corpus.jsonl"))?;
            m.output("keywords", &out.join("keywords.tsv"))?;
            m.output("references", &out.join("refs.tsv"))?;
            m.write(&out)
        }

        Command::Pipeline {
            corpus,
            keywords,
            refs,
            alpha,
            decision,
            delta,
            no_dedup,
            out_dir,
        } => {
            let rescore = RescoreConfig::new(alpha)?;
            let docs = parse_cn_corpus(&corpus)?;
            let kws = parse_keyword_list(&keywords)?;
            let references = parse_references(&refs)?;
            let trial = decision
                .trial_seconds
                .unwrap_or_else(|| corpus_duration(&docs));
            let policy = decision.policy(Some(trial))?;
            let scoring = ScoringConfig::new(decision.beta, trial, delta)?;

            let index = build_index(&docs);
            let candidates = search_stage(&index, &docs, &kws, !no_dedup);
            let run = evaluate_alpha(&candidates, &references, &rescore, &policy, &scoring)?;

            ensure_dir(&out_dir)?;
            let paths = [
                ("candidates", out_dir.join("candidates.tsv")),
                ("rescored", out_dir.join("rescored.tsv")),
                ("weights", out_dir.join("weights.tsv")),
                ("decided", out_dir.join("decided.tsv")),
                ("report", out_dir.join("report.json")),
                ("keyword_detail", out_dir.join("keyword_detail.tsv")),
            ];
            write_candidates(&paths[0].1, &candidates)?;
            write_candidates(&paths[1].1, &run.rescored)?;
            write_weight_tables(&paths[2].1, &run.weight_tables)?;
            write_candidates(&paths[3].1, &run.decided)?;
            write_report_json(&paths[4].1, &run.report)?;
            write_keyword_detail(&paths[5].1, &run.report)?;
            info!(
                "alpha {alpha}: {} candidates, ATWV {:.4}, MTWV {:.4}",
                candidates.len(),
                run.report.atwv,
                run.report.mtwv.value
            );

            let mut m = RunManifest::new("pipeline");
            m.config("alpha", alpha);
            decision.record(&mut m, &policy, Some(trial));
            m.config("delta", delta);
            m.config("dedup", !no_dedup);
            m.input("corpus", &corpus)?;
            m.input("keywords", &keywords)?;
            m.input("references", &refs)?;
            for (role, path) in &paths {
                m.output(role, path)?;
            }
            m.write(&out_dir)
        }
    }
}
