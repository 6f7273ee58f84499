use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus_io::{Candidate, RefOccurrence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitLabel {
    Correct,
    FalseAlarm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KeywordCounts {
    pub n_true: usize,
    pub n_correct: usize,
    pub n_fa: usize,
    pub n_miss: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// One label per hypothesis, in input order.
    pub labels: Vec<HitLabel>,
    /// One flag per reference, in input order.
    pub ref_matched: Vec<bool>,
    /// Every keyword seen among hypotheses or references.
    pub per_keyword: BTreeMap<String, KeywordCounts>,
}

/// Candidate (hypothesis, reference) pairs within `delta`, grouped by
/// (kw_id, doc_id) and pre-sorted in matching order. Built once, then
/// matched against any subset of the hypotheses.
#[derive(Debug, Clone)]
pub struct PreparedAlignment {
    pairs: Vec<(usize, usize)>,
    hyp_kw: Vec<usize>,
    ref_kw: Vec<usize>,
    keywords: Vec<String>,
    num_refs: usize,
}

impl PreparedAlignment {
    pub fn new(hyps: &[Candidate], refs: &[RefOccurrence], delta: f64) -> Self {
        let keywords: Vec<String> = hyps
            .iter()
            .map(|h| h.kw_id.clone())
            .chain(refs.iter().map(|r| r.kw_id.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let kw_pos = |kw: &str| keywords.binary_search_by(|k| k.as_str().cmp(kw)).unwrap();
        let hyp_kw = hyps.iter().map(|h| kw_pos(&h.kw_id)).collect();
        let ref_kw = refs.iter().map(|r| kw_pos(&r.kw_id)).collect();

        let mut refs_by_group: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
        for (j, r) in refs.iter().enumerate() {
            refs_by_group
                .entry((&r.kw_id, &r.doc_id))
                .or_default()
                .push(j);
        }
        let mut hyps_by_group: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
        for (i, h) in hyps.iter().enumerate() {
            hyps_by_group
                .entry((&h.kw_id, &h.doc_id))
                .or_default()
                .push(i);
        }

        let mut pairs = Vec::new();
        for (key, hyp_ids) in &hyps_by_group {
            let Some(ref_ids) = refs_by_group.get(key) else {
                continue;
            };
            let mut group: Vec<(f64, usize, usize)> = Vec::new();
            for &i in hyp_ids {
                for &j in ref_ids {
                    let dist = (hyps[i].midpoint() - refs[j].midpoint()).abs();
                    if dist <= delta {
                        group.push((dist, i, j));
                    }
                }
            }
            // nearest pairs first; ties by hypothesis then reference start time
            group.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| hyps[a.1].start.total_cmp(&hyps[b.1].start))
                    .then_with(|| refs[a.2].start.total_cmp(&refs[b.2].start))
                    .then_with(|| a.1.cmp(&b.1))
                    .then_with(|| a.2.cmp(&b.2))
            });
            pairs.extend(group.into_iter().map(|(_, i, j)| (i, j)));
        }
        PreparedAlignment {
            pairs,
            hyp_kw,
            ref_kw,
            keywords,
            num_refs: refs.len(),
        }
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    /// Per-keyword counts when only hypotheses with `include(i)` are kept.
    /// Indexed like [`Self::keywords`].
    pub fn counts_for(&self, include: impl Fn(usize) -> bool) -> Vec<KeywordCounts> {
        let (hyp_correct, ref_matched) = self.greedy(&include);
        let mut counts = vec![KeywordCounts::default(); self.keywords.len()];
        for (j, &k) in self.ref_kw.iter().enumerate() {
            counts[k].n_true += 1;
            if ref_matched[j] {
                counts[k].n_correct += 1;
            } else {
                counts[k].n_miss += 1;
            }
        }
        for (i, &k) in self.hyp_kw.iter().enumerate() {
            if include(i) && !hyp_correct[i] {
                counts[k].n_fa += 1;
            }
        }
        counts
    }

    fn greedy(&self, include: &impl Fn(usize) -> bool) -> (Vec<bool>, Vec<bool>) {
        let mut hyp_correct = vec![false; self.hyp_kw.len()];
        let mut ref_matched = vec![false; self.num_refs];
        for &(i, j) in &self.pairs {
            if !hyp_correct[i] && !ref_matched[j] && include(i) {
                hyp_correct[i] = true;
                ref_matched[j] = true;
            }
        }
        (hyp_correct, ref_matched)
    }

    pub fn align_all(&self) -> AlignmentResult {
        let (hyp_correct, ref_matched) = self.greedy(&|_| true);
        let counts = self.counts_for(|_| true);
        AlignmentResult {
            labels: hyp_correct
                .into_iter()
                .map(|ok| {
                    if ok {
                        HitLabel::Correct
                    } else {
                        HitLabel::FalseAlarm
                    }
                })
                .collect(),
            ref_matched,
            per_keyword: self.keywords.iter().cloned().zip(counts).collect(),
        }
    }
}

/// Match hypotheses to references of the same keyword and document.
///
/// A hypothesis is correct when its midpoint lies within `delta` seconds of
/// a still-unmatched reference midpoint. Pairs are consumed greedily from the
/// closest in time; each reference is used at most once.
pub fn align(hyps: &[Candidate], refs: &[RefOccurrence], delta: f64) -> AlignmentResult {
    PreparedAlignment::new(hyps, refs, delta).align_all()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(kw: &str, doc: &str, start: f64, dur: f64) -> RefOccurrence {
        RefOccurrence {
            kw_id: kw.into(),
            doc_id: doc.into(),
            start,
            duration: dur,
        }
    }

    #[test]
    fn midpoint_within_delta_is_correct() {
        // hyp midpoint 3.42, ref midpoint 3.40
        let h = Candidate::new("KW1", "d1", 3.2, 0.44, 0.9);
        let a = align(&[h], &[r("KW1", "d1", 3.2, 0.4)], 0.5);
        assert_eq!(a.labels, vec![HitLabel::Correct]);
        assert_eq!(a.ref_matched, vec![true]);
        assert_eq!(
            a.per_keyword["KW1"],
            KeywordCounts {
                n_true: 1,
                n_correct: 1,
                n_fa: 0,
                n_miss: 0
            }
        );
    }

    #[test]
    fn nearer_hypothesis_wins() {
        let far = Candidate::new("KW1", "d1", 2.8, 0.4, 0.9); // mid 3.0
        let near = Candidate::new("KW1", "d1", 3.15, 0.4, 0.5); // mid 3.35
        let a = align(&[far, near], &[r("KW1", "d1", 3.2, 0.4)], 0.5);
        assert_eq!(a.labels, vec![HitLabel::FalseAlarm, HitLabel::Correct]);
    }

    #[test]
    fn no_hypotheses_all_missed() {
        let a = align(
            &[],
            &[r("KW1", "d1", 0.0, 0.4), r("KW1", "d2", 0.0, 0.4)],
            0.5,
        );
        assert_eq!(a.per_keyword["KW1"].n_miss, 2);
        assert_eq!(a.per_keyword["KW1"].n_correct, 0);
    }

    #[test]
    fn other_document_or_keyword_never_matches() {
        let hs = [
            Candidate::new("KW1", "d2", 0.0, 0.4, 0.9),
            Candidate::new("KW2", "d1", 0.0, 0.4, 0.9),
        ];
        let a = align(&hs, &[r("KW1", "d1", 0.0, 0.4)], 0.5);
        assert_eq!(a.labels, vec![HitLabel::FalseAlarm, HitLabel::FalseAlarm]);
        assert_eq!(a.per_keyword["KW2"].n_true, 0);
        assert_eq!(a.per_keyword["KW2"].n_fa, 1);
    }

    #[test]
    fn outside_delta_is_false_alarm() {
        let h = Candidate::new("KW1", "d1", 1.0, 0.4, 0.9);
        let a = align(&[h], &[r("KW1", "d1", 0.0, 0.4)], 0.5);
        assert_eq!(a.labels, vec![HitLabel::FalseAlarm]);
    }

    #[test]
    fn subset_counts() {
        let hs = [
            Candidate::new("KW1", "d1", 0.0, 0.4, 0.9),
            Candidate::new("KW1", "d1", 5.0, 0.4, 0.2),
        ];
        let refs = [r("KW1", "d1", 0.0, 0.4)];
        let prep = PreparedAlignment::new(&hs, &refs, 0.5);
        let only_second = prep.counts_for(|i| i == 1);
        assert_eq!(
            only_second[0],
            KeywordCounts {
                n_true: 1,
                n_correct: 0,
                n_fa: 1,
                n_miss: 1
            }
        );
    }
}
