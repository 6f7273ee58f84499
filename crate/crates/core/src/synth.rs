//! Seeded synthetic confusion-network corpora with planted topic burstiness.
//!
//! Generation, in order, from a single ChaCha8 stream seeded with `seed`:
//!
//! 1. Vocabulary `w0000 ..`. The first tokens are reserved for keywords
//!    (one token per keyword, two tokens for roughly one keyword in five);
//!    the rest are filler tokens drawn with Zipf weights `1 / rank`.
//! 2. Documents are split into topics of `docs_per_topic` consecutive
//!    documents; every keyword gets a uniformly drawn home topic.
//! 3. Each keyword receives 4 to 12 true occurrences, of which
//!    `topic_affinity * n` go to home documents (the fractional part decides
//!    one extra occurrence by a coin flip, so each occurrence is home with
//!    probability `topic_affinity`). The rest land uniformly in documents
//!    outside the home topic.
//! 4. Slots last 0.20 to 0.60 s (centisecond grid) and follow each other
//!    without gaps. A slot carries its true token plus Binomial(3, noise)
//!    competitors; a competitor is `<eps>` with probability 0.1, a keyword
//!    token with probability 0.05, otherwise a filler token. A keyword
//!    competitor is taken from the keywords homed in the slot's topic with
//!    probability 0.8 (topical words confuse with each other), from all
//!    keywords otherwise.
//! 5. Posteriors are Gamma draws normalized to sum to one: shape
//!    `1 + 3 * (1 - noise)` for the true token and 1 for competitors. At
//!    `noise = 0` every slot holds only its true token with posterior 1.

use std::collections::BTreeSet;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Gamma};
use serde::Serialize;

use crate::corpus_io::{
    write_cn_corpus, write_keyword_list, write_references, ConfusionNetworkDoc, KeywordEntry,
    RefOccurrence, Slot, WordArc, EPS,
};
use crate::error::{Error, Result};

const MAX_COMPETITORS: u64 = 3;
const EPS_COMPETITOR_PROB: f64 = 0.1;
const KEYWORD_CONFUSION_PROB: f64 = 0.05;
const TOPICAL_CONFUSION_PROB: f64 = 0.8;
const TWO_TOKEN_KEYWORD_PROB: f64 = 0.2;
const MIN_OCCURRENCES: usize = 4;
const MAX_OCCURRENCES: usize = 12;
const MIN_FILLER_TOKENS: usize = 10;
const PLACEMENT_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthConfig {
    pub num_docs: usize,
    pub slots_per_doc: usize,
    pub vocab_size: usize,
    pub num_keywords: usize,
    pub topic_affinity: f64,
    pub docs_per_topic: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_docs: 200,
            slots_per_doc: 150,
            vocab_size: 2000,
            num_keywords: 50,
            topic_affinity: 0.9,
            docs_per_topic: 5,
            noise: 0.5,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_docs", self.num_docs),
            ("slots_per_doc", self.slots_per_doc),
            ("vocab_size", self.vocab_size),
            ("num_keywords", self.num_keywords),
            ("docs_per_topic", self.docs_per_topic),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        for (name, p) in [
            ("topic_affinity", self.topic_affinity),
            ("noise", self.noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        if self.slots_per_doc < 2 {
            return Err(Error::Config("slots_per_doc must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub corpus: Vec<ConfusionNetworkDoc>,
    pub keywords: Vec<KeywordEntry>,
    pub references: Vec<RefOccurrence>,
    /// Home topic of each keyword, parallel to `keywords`.
    pub home_topics: Vec<usize>,
}

impl SynthCorpus {
    pub fn topic_of(&self, doc_index: usize, config: &SynthConfig) -> usize {
        doc_index / config.docs_per_topic
    }
}

fn token_name(i: usize) -> String {
    format!("w{i:04}")
}

fn doc_name(i: usize) -> String {
    format!("doc{i:04}")
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // keywords and their reserved tokens
    let mut keywords = Vec::with_capacity(config.num_keywords);
    let mut next_token = 0;
    for k in 0..config.num_keywords {
        let len = if rng.gen_bool(TWO_TOKEN_KEYWORD_PROB) {
            2
        } else {
            1
        };
        let tokens = (next_token..next_token + len).map(token_name).collect();
        next_token += len;
        keywords.push(KeywordEntry {
            kw_id: format!("KW{k:03}"),
            tokens,
        });
    }
    let keyword_tokens = next_token;
    if config.vocab_size < keyword_tokens + MIN_FILLER_TOKENS {
        return Err(Error::Config(format!(
            "vocab_size {} too small for {keyword_tokens} keyword tokens plus {MIN_FILLER_TOKENS} filler tokens",
            config.vocab_size
        )));
    }
    let filler_count = config.vocab_size - keyword_tokens;
    let filler_dist = WeightedIndex::new((1..=filler_count).map(|r| 1.0 / r as f64))
        .expect("zipf weights are positive");

    let num_topics = config.num_docs.div_ceil(config.docs_per_topic);
    let home_topics: Vec<usize> = (0..config.num_keywords)
        .map(|_| rng.gen_range(0..num_topics))
        .collect();

    // true token per slot, None = filler
    let mut planted: Vec<Vec<Option<String>>> =
        vec![vec![None; config.slots_per_doc]; config.num_docs];
    let mut placements: Vec<(usize, usize, usize)> = Vec::new(); // (keyword, doc, first slot)
    for (k, kw) in keywords.iter().enumerate() {
        let want = rng.gen_range(MIN_OCCURRENCES..=MAX_OCCURRENCES);
        let home_lo = home_topics[k] * config.docs_per_topic;
        let home_hi = (home_lo + config.docs_per_topic).min(config.num_docs);
        let span = kw.tokens.len();
        let home_share = config.topic_affinity * want as f64;
        let mut home_count = home_share.floor() as usize;
        if rng.gen_bool(home_share.fract()) {
            home_count += 1;
        }
        let away_docs = config.num_docs - (home_hi - home_lo);
        for i in 0..want {
            let doc = if i < home_count || away_docs == 0 {
                rng.gen_range(home_lo..home_hi)
            } else {
                // uniform over documents outside the home topic
                let j = rng.gen_range(0..away_docs);
                if j < home_lo {
                    j
                } else {
                    j + (home_hi - home_lo)
                }
            };
            for _ in 0..PLACEMENT_ATTEMPTS {
                let slot = rng.gen_range(0..=config.slots_per_doc - span);
                if planted[doc][slot..slot + span].iter().all(Option::is_none) {
                    for (o, tok) in kw.tokens.iter().enumerate() {
                        planted[doc][slot + o] = Some(tok.clone());
                    }
                    placements.push((k, doc, slot));
                    break;
                }
            }
        }
    }

    // keyword token indices grouped by home topic
    let mut topic_tokens: Vec<Vec<usize>> = vec![Vec::new(); num_topics];
    let mut first_token = 0;
    for (k, kw) in keywords.iter().enumerate() {
        topic_tokens[home_topics[k]].extend(first_token..first_token + kw.tokens.len());
        first_token += kw.tokens.len();
    }

    let competitors = Binomial::new(MAX_COMPETITORS, config.noise).expect("noise is a probability");
    let true_shape =
        Gamma::<f64>::new(1.0 + 3.0 * (1.0 - config.noise), 1.0).expect("positive shape");
    let comp_shape = Gamma::<f64>::new(1.0, 1.0).expect("positive shape");

    let mut corpus = Vec::with_capacity(config.num_docs);
    for (d, doc_plan) in planted.iter().enumerate() {
        let mut slots = Vec::with_capacity(config.slots_per_doc);
        let mut cs: u64 = 0;
        for truth in doc_plan {
            let dur_cs: u64 = rng.gen_range(20..=60);
            let true_token = match truth {
                Some(t) => t.clone(),
                None => token_name(keyword_tokens + filler_dist.sample(&mut rng)),
            };
            let mut tokens = vec![true_token];
            let m = competitors.sample(&mut rng);
            let mut used: BTreeSet<String> = tokens.iter().cloned().collect();
            for _ in 0..m {
                let tok = if rng.gen_bool(EPS_COMPETITOR_PROB) {
                    EPS.to_string()
                } else if rng.gen_bool(KEYWORD_CONFUSION_PROB) {
                    let local = &topic_tokens[d / config.docs_per_topic];
                    if !local.is_empty() && rng.gen_bool(TOPICAL_CONFUSION_PROB) {
                        token_name(local[rng.gen_range(0..local.len())])
                    } else {
                        token_name(rng.gen_range(0..keyword_tokens))
                    }
                } else {
                    token_name(keyword_tokens + filler_dist.sample(&mut rng))
                };
                if used.insert(tok.clone()) {
                    tokens.push(tok);
                }
            }
            let mut raw: Vec<f64> = Vec::with_capacity(tokens.len());
            raw.push(true_shape.sample(&mut rng).max(1e-6));
            for _ in 1..tokens.len() {
                raw.push(comp_shape.sample(&mut rng).max(1e-6));
            }
            let total: f64 = raw.iter().sum();
            let arcs = tokens
                .into_iter()
                .zip(raw)
                .map(|(token, w)| WordArc {
                    token,
                    posterior: w / total,
                })
                .collect();
            slots.push(Slot {
                start: cs as f64 / 100.0,
                duration: dur_cs as f64 / 100.0,
                arcs,
            });
            cs += dur_cs;
        }
        corpus.push(ConfusionNetworkDoc {
            doc_id: doc_name(d),
            slots,
        });
    }

    let mut references: Vec<RefOccurrence> = placements
        .iter()
        .map(|&(k, d, s)| {
            let first = &corpus[d].slots[s];
            let last = &corpus[d].slots[s + keywords[k].tokens.len() - 1];
            RefOccurrence {
                kw_id: keywords[k].kw_id.clone(),
                doc_id: corpus[d].doc_id.clone(),
                start: first.start,
                duration: ((last.end() - first.start) * 100.0).round() / 100.0,
            }
        })
        .collect();
    references.sort_by(|a, b| {
        a.kw_id
            .cmp(&b.kw_id)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then_with(|| a.start.total_cmp(&b.start))
    });

    Ok(SynthCorpus {
        corpus,
        keywords,
        references,
        home_topics,
    })
}

/// Write `corpus.jsonl`, `keywords.tsv` and `refs.tsv` into `dir`.
pub fn write_synth(dir: &Path, synth: &SynthCorpus) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_cn_corpus(&dir.join("corpus.jsonl"), &synth.corpus)?;
    write_keyword_list(&dir.join("keywords.tsv"), &synth.keywords)?;
    write_references(&dir.join("refs.tsv"), &synth.references)
}
