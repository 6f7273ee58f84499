//! Random instance generators and brute-force reference implementations
//! shared by the integration tests. Nothing here calls into the library's
//! algorithms; only its plain data types are used.

#![allow(dead_code)]

use std::collections::HashMap;

use drstd::corpus_io::{
    Candidate, ConfusionNetworkDoc, KeywordEntry, RefOccurrence, Slot, WordArc, EPS,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- generators

const TOY_VOCAB: [&str; 6] = ["cat", "sat", "mat", "hat", "bat", "rat"];

/// Small-vocabulary corpus with frequent `<eps>` arcs so multi-token paths
/// with skips are common.
pub fn random_corpus(
    rng: &mut impl Rng,
    max_docs: usize,
    max_slots: usize,
) -> Vec<ConfusionNetworkDoc> {
    let num_docs = rng.gen_range(1..=max_docs);
    (0..num_docs)
        .map(|d| {
            let num_slots = rng.gen_range(1..=max_slots);
            let mut t = 0.0;
            let slots = (0..num_slots)
                .map(|_| {
                    let duration = rng.gen_range(1..=8) as f64 * 0.05;
                    let width = rng.gen_range(1..=3);
                    let mut tokens: Vec<&str> =
                        TOY_VOCAB.choose_multiple(rng, width).copied().collect();
                    if rng.gen_bool(0.4) {
                        tokens.push(EPS);
                    }
                    let raw: Vec<f64> = tokens.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    let arcs = tokens
                        .iter()
                        .zip(&raw)
                        .map(|(tok, w)| WordArc {
                            token: tok.to_string(),
                            posterior: w / total,
                        })
                        .collect();
                    let slot = Slot {
                        start: t,
                        duration,
                        arcs,
                    };
                    t += duration;
                    slot
                })
                .collect();
            ConfusionNetworkDoc {
                doc_id: format!("d{d:02}"),
                slots,
            }
        })
        .collect()
}

pub fn random_keywords(rng: &mut impl Rng, count: usize) -> Vec<KeywordEntry> {
    (0..count)
        .map(|k| KeywordEntry {
            kw_id: format!("K{k:02}"),
            tokens: (0..rng.gen_range(1..=3))
                .map(|_| TOY_VOCAB.choose(rng).unwrap().to_string())
                .collect(),
        })
        .collect()
}

/// Candidates with scores in (0, 1] spread over the given keyword and
/// document counts.
pub fn random_candidates(
    rng: &mut impl Rng,
    count: usize,
    num_keywords: usize,
    num_docs: usize,
) -> Vec<Candidate> {
    (0..count)
        .map(|_| {
            let score = 1.0 - rng.gen::<f64>(); // (0, 1]
            Candidate::new(
                &format!("K{:02}", rng.gen_range(0..num_keywords)),
                &format!("d{:02}", rng.gen_range(0..num_docs)),
                rng.gen_range(0..600) as f64 * 0.1,
                rng.gen_range(2..10) as f64 * 0.1,
                score,
            )
        })
        .collect()
}

/// References and hypotheses on a coarse time grid so that alignment ties
/// and near misses around the tolerance actually happen.
pub fn random_scoring_instance(
    rng: &mut impl Rng,
    max_keywords: usize,
    max_docs: usize,
) -> (Vec<Candidate>, Vec<RefOccurrence>) {
    let num_keywords = rng.gen_range(1..=max_keywords);
    let num_docs = rng.gen_range(1..=max_docs);
    let mut refs = Vec::new();
    let mut hyps = Vec::new();
    for k in 0..num_keywords {
        let kw = format!("K{k:02}");
        for _ in 0..rng.gen_range(0..6) {
            refs.push(RefOccurrence {
                kw_id: kw.clone(),
                doc_id: format!("d{:02}", rng.gen_range(0..num_docs)),
                start: rng.gen_range(0..100) as f64 * 0.25,
                duration: rng.gen_range(1..5) as f64 * 0.1,
            });
        }
        for _ in 0..rng.gen_range(0..10) {
            let near = refs.iter().filter(|r| r.kw_id == kw).collect::<Vec<_>>();
            let (doc, start) = match near.choose(rng) {
                Some(r) if rng.gen_bool(0.6) => (
                    r.doc_id.clone(),
                    r.start + rng.gen_range(-6..=6) as f64 * 0.1,
                ),
                _ => (
                    format!("d{:02}", rng.gen_range(0..num_docs)),
                    rng.gen_range(0..100) as f64 * 0.25,
                ),
            };
            let mut c = Candidate::new(
                &kw,
                &doc,
                start.max(0.0),
                rng.gen_range(1..5) as f64 * 0.1,
                1.0 - rng.gen::<f64>(),
            );
            if rng.gen_bool(0.2) {
                c.decision = Some(drstd::corpus_io::Decision::No);
            }
            hyps.push(c);
        }
    }
    (hyps, refs)
}

// ---------------------------------------------------------------- oracles

/// Every hit of every keyword by scanning all start slots and enumerating
/// every increasing position tuple whose gaps are `<eps>`-bearing slots.
pub fn naive_search(corpus: &[ConfusionNetworkDoc], keywords: &[KeywordEntry]) -> Vec<Candidate> {
    fn posterior(slot: &Slot, token: &str) -> Option<f64> {
        slot.arcs
            .iter()
            .find(|a| a.token == token)
            .map(|a| a.posterior)
    }
    let mut out = Vec::new();
    for kw in keywords {
        for doc in corpus {
            let n = doc.slots.len();
            // stack of partial paths: (positions so far, score)
            for s in 0..n {
                let Some(p0) = posterior(&doc.slots[s], &kw.tokens[0]) else {
                    continue;
                };
                let mut partial = vec![(vec![s], p0)];
                for tok in &kw.tokens[1..] {
                    let mut next = Vec::new();
                    for (pos, score) in &partial {
                        let last = *pos.last().unwrap();
                        let mut gap = 1.0;
                        for q in last + 1..n {
                            if let Some(p) = posterior(&doc.slots[q], tok) {
                                let mut np = pos.clone();
                                np.push(q);
                                next.push((np, score * gap * p));
                            }
                            match posterior(&doc.slots[q], EPS) {
                                Some(e) => gap *= e,
                                None => break,
                            }
                        }
                    }
                    partial = next;
                }
                for (pos, score) in partial {
                    let first = &doc.slots[pos[0]];
                    let last = &doc.slots[*pos.last().unwrap()];
                    out.push(Candidate::new(
                        &kw.kw_id,
                        &doc.doc_id,
                        first.start,
                        last.start + last.duration - first.start,
                        score,
                    ));
                }
            }
        }
    }
    out
}

/// Straight-line document-ranking rescoring: per-(keyword, document) sums,
/// per-keyword maximum, ratio, then linear interpolation.
pub fn naive_rescore(candidates: &[Candidate], alpha: f64) -> Vec<f64> {
    let mut doc_sum: HashMap<(String, String), f64> = HashMap::new();
    for c in candidates {
        *doc_sum
            .entry((c.kw_id.clone(), c.doc_id.clone()))
            .or_default() += c.score;
    }
    let mut kw_max: HashMap<String, f64> = HashMap::new();
    for ((kw, _), s) in &doc_sum {
        let m = kw_max.entry(kw.clone()).or_insert(0.0);
        if *s > *m {
            *m = *s;
        }
    }
    candidates
        .iter()
        .map(|c| {
            let s = doc_sum[&(c.kw_id.clone(), c.doc_id.clone())];
            let w = s / kw_max[&c.kw_id];
            alpha * w + (1.0 - alpha) * c.score
        })
        .collect()
}

/// Greedy nearest-midpoint matching done the slow way: repeatedly take the
/// closest unmatched (hypothesis, reference) pair of the same keyword and
/// document within `delta`. Returns a correct flag per hypothesis.
pub fn naive_match(hyps: &[Candidate], refs: &[RefOccurrence], delta: f64) -> Vec<bool> {
    let mid_h = |h: &Candidate| h.start + h.duration / 2.0;
    let mid_r = |r: &RefOccurrence| r.start + r.duration / 2.0;
    let mut hyp_done = vec![false; hyps.len()];
    let mut ref_done = vec![false; refs.len()];
    loop {
        let mut best: Option<(f64, f64, f64, usize, usize)> = None;
        for (i, h) in hyps.iter().enumerate() {
            if hyp_done[i] {
                continue;
            }
            for (j, r) in refs.iter().enumerate() {
                if ref_done[j] || h.kw_id != r.kw_id || h.doc_id != r.doc_id {
                    continue;
                }
                let d = (mid_h(h) - mid_r(r)).abs();
                if d > delta {
                    continue;
                }
                let key = (d, h.start, r.start, i, j);
                let better = match best {
                    None => true,
                    Some(b) => (key.0, key.1, key.2, key.3, key.4)
                        .partial_cmp(&(b.0, b.1, b.2, b.3, b.4))
                        .unwrap()
                        .is_lt(),
                };
                if better {
                    best = Some(key);
                }
            }
        }
        match best {
            Some((_, _, _, i, j)) => {
                hyp_done[i] = true;
                ref_done[j] = true;
            }
            None => break,
        }
    }
    hyp_done
}

/// ATWV straight from the definitions: detections are rows not marked NO;
/// keywords without references are left out.
pub fn naive_atwv(
    hyps: &[Candidate],
    refs: &[RefOccurrence],
    beta: f64,
    trial_seconds: f64,
    delta: f64,
) -> Option<f64> {
    let detections: Vec<Candidate> = hyps.iter().filter(|h| h.is_detection()).cloned().collect();
    naive_twv_of(&detections, refs, beta, trial_seconds, delta)
}

pub fn naive_twv_of(
    detections: &[Candidate],
    refs: &[RefOccurrence],
    beta: f64,
    trial_seconds: f64,
    delta: f64,
) -> Option<f64> {
    let correct = naive_match(detections, refs, delta);
    let mut kws: Vec<&str> = refs.iter().map(|r| r.kw_id.as_str()).collect();
    kws.sort();
    kws.dedup();
    if kws.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for kw in &kws {
        let n_true = refs.iter().filter(|r| r.kw_id == *kw).count() as f64;
        let n_correct = detections
            .iter()
            .zip(&correct)
            .filter(|(h, ok)| h.kw_id == *kw && **ok)
            .count() as f64;
        let n_fa = detections
            .iter()
            .zip(&correct)
            .filter(|(h, ok)| h.kw_id == *kw && !**ok)
            .count() as f64;
        let p_miss = 1.0 - n_correct / n_true;
        let p_fa = n_fa / (trial_seconds - n_true);
        total += 1.0 - p_miss - beta * p_fa;
    }
    Some(total / kws.len() as f64)
}

/// Best TWV over every global cut point, by brute force.
pub fn naive_mtwv(
    candidates: &[Candidate],
    refs: &[RefOccurrence],
    beta: f64,
    trial_seconds: f64,
    delta: f64,
) -> f64 {
    let mut cuts: Vec<f64> = candidates.iter().map(|c| c.score).collect();
    cuts.push(f64::INFINITY);
    cuts.into_iter()
        .map(|t| {
            let kept: Vec<Candidate> = candidates
                .iter()
                .filter(|c| c.score >= t)
                .cloned()
                .collect();
            naive_twv_of(&kept, refs, beta, trial_seconds, delta).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Expected TWV of accepting `accepted` when every score is read as the
/// probability of a true hit and the expected true count is the score sum.
pub fn expected_twv(scores: &[f64], accepted: &[bool], beta: f64, trial_seconds: f64) -> f64 {
    let n_hat: f64 = scores.iter().sum();
    let mut hit = 0.0;
    let mut fa = 0.0;
    for (s, yes) in scores.iter().zip(accepted) {
        if *yes {
            hit += s;
            fa += 1.0 - s;
        }
    }
    hit / n_hat - beta * fa / (trial_seconds - n_hat)
}

/// Average ranks by counting: rank = #smaller + (#equal + 1) / 2.
pub fn naive_average_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|a| {
            let smaller = x.iter().filter(|b| *b < a).count() as f64;
            let equal = x.iter().filter(|b| *b == a).count() as f64;
            smaller + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Sort key used to compare candidate multisets.
pub fn sorted(mut c: Vec<Candidate>) -> Vec<Candidate> {
    c.sort_by(|a, b| {
        a.kw_id
            .cmp(&b.kw_id)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then_with(|| a.start.total_cmp(&b.start))
            .then_with(|| a.duration.total_cmp(&b.duration))
            .then_with(|| b.score.total_cmp(&a.score))
    });
    c
}

/// Same candidates in the same order, scores within `tol`.
pub fn same_candidates(a: &[Candidate], b: &[Candidate], tol: f64) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{} candidates vs {}", a.len(), b.len()));
    }
    for (x, y) in a.iter().zip(b) {
        let same_place = x.kw_id == y.kw_id
            && x.doc_id == y.doc_id
            && (x.start - y.start).abs() <= 1e-9
            && (x.duration - y.duration).abs() <= 1e-9;
        if !same_place || (x.score - y.score).abs() > tol {
            return Err(format!("{x:?} vs {y:?}"));
        }
    }
    Ok(())
}
