//! Confidence re-estimation from document ranking weights.
//!
//! For each keyword the hit confidences are summed per document, each sum
//! is divided by the largest one to give the document's ranking weight, and
//! every hit's score is replaced by
//! `alpha * weight(doc) + (1 - alpha) * score`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus_io::Candidate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescoreConfig {
    alpha: f64,
}

impl RescoreConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(RescoreConfig { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocWeight {
    /// Summed confidence of the keyword's hits in the document.
    pub doc_score: f64,
    /// `doc_score / max_score`; exactly 1 for the top document(s).
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocWeightTable {
    pub kw_id: String,
    pub entries: BTreeMap<String, DocWeight>,
    /// Largest `doc_score`; 0 for an empty table.
    pub max_score: f64,
}

impl DocWeightTable {
    pub fn empty(kw_id: &str) -> Self {
        DocWeightTable {
            kw_id: kw_id.to_string(),
            entries: BTreeMap::new(),
            max_score: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, doc_id: &str) -> Option<f64> {
        self.entries.get(doc_id).map(|e| e.weight)
    }

    /// Documents by descending weight, ties broken by doc_id.
    pub fn ranked_docs(&self) -> Vec<(&str, f64)> {
        let mut docs: Vec<(&str, f64)> = self
            .entries
            .iter()
            .map(|(d, e)| (d.as_str(), e.weight))
            .collect();
        docs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        docs
    }
}

/// Per-document sum of hit confidences for one keyword, in input order.
pub fn sum_document_scores(candidates: &[Candidate]) -> Result<BTreeMap<String, f64>> {
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    let Some(first) = candidates.first() else {
        return Ok(sums);
    };
    for c in candidates {
        if c.kw_id != first.kw_id {
            return Err(Error::MixedKeywords {
                expected: first.kw_id.clone(),
                found: c.kw_id.clone(),
            });
        }
        *sums.entry(c.doc_id.clone()).or_insert(0.0) += c.score;
    }
    Ok(sums)
}

/// Relative-to-max weights. An empty input yields an empty table.
pub fn document_ranking_weights(
    kw_id: &str,
    doc_scores: &BTreeMap<String, f64>,
) -> Result<DocWeightTable> {
    if let Some((doc_id, &score)) = doc_scores.iter().find(|(_, &s)| s.is_nan() || s <= 0.0) {
        return Err(Error::NonPositiveScore {
            kw_id: kw_id.to_string(),
            doc_id: doc_id.clone(),
            score,
        });
    }
    let Some(max_score) = doc_scores.values().copied().reduce(f64::max) else {
        return Ok(DocWeightTable::empty(kw_id));
    };
    let entries = doc_scores
        .iter()
        .map(|(d, &s)| {
            (
                d.clone(),
                DocWeight {
                    doc_score: s,
                    weight: s / max_score,
                },
            )
        })
        .collect();
    Ok(DocWeightTable {
        kw_id: kw_id.to_string(),
        entries,
        max_score,
    })
}

pub fn reestimate_confidence(
    candidate: &Candidate,
    table: &DocWeightTable,
    config: &RescoreConfig,
) -> Result<Candidate> {
    let weight = table
        .weight(&candidate.doc_id)
        .ok_or_else(|| Error::MissingDocWeight {
            kw_id: candidate.kw_id.clone(),
            doc_id: candidate.doc_id.clone(),
        })?;
    let alpha = config.alpha;
    let score = (alpha * weight + (1.0 - alpha) * candidate.score).clamp(0.0, 1.0);
    Ok(Candidate {
        score,
        ..candidate.clone()
    })
}

/// Rescore every candidate. Output keeps input order and length; the weight
/// table of each keyword is returned alongside.
pub fn rescore_candidates(
    candidates: &[Candidate],
    config: &RescoreConfig,
) -> Result<(Vec<Candidate>, BTreeMap<String, DocWeightTable>)> {
    if let Some(c) = candidates
        .iter()
        .find(|c| c.score.is_nan() || c.score <= 0.0)
    {
        return Err(Error::NonPositiveScore {
            kw_id: c.kw_id.clone(),
            doc_id: c.doc_id.clone(),
            score: c.score,
        });
    }
    let mut by_kw: BTreeMap<&str, Vec<Candidate>> = BTreeMap::new();
    for c in candidates {
        by_kw.entry(&c.kw_id).or_default().push(c.clone());
    }
    let tables: BTreeMap<String, DocWeightTable> = by_kw
        .par_iter()
        .map(|(kw, group)| {
            let sums = sum_document_scores(group)?;
            Ok((kw.to_string(), document_ranking_weights(kw, &sums)?))
        })
        .collect::<Result<_>>()?;
    let rescored = candidates
        .iter()
        .map(|c| reestimate_confidence(c, &tables[&c.kw_id], config))
        .collect::<Result<Vec<_>>>()?;
    Ok((rescored, tables))
}

/// TSV `kw_id, doc_id, S_d, W_d`, ordered by keyword then document.
pub fn write_weight_tables(path: &Path, tables: &BTreeMap<String, DocWeightTable>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(out, "# kw_id\tdoc_id\tS_d\tW_d")?;
        for table in tables.values() {
            for (doc, e) in &table.entries {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    table.kw_id, doc, e.doc_score, e.weight
                )?;
            }
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(doc: &str, score: f64) -> Candidate {
        Candidate::new("KW1", doc, 0.0, 0.5, score)
    }

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(d, s)| (d.to_string(), *s)).collect()
    }

    #[test]
    fn sums_per_document() {
        let sums = sum_document_scores(&[c("A", 0.5), c("B", 0.4), c("A", 0.3)]).unwrap();
        assert_eq!(sums.len(), 2);
        assert!((sums["A"] - 0.8).abs() < 1e-15);
        assert_eq!(sums["B"], 0.4);
        assert_eq!(
            sum_document_scores(&[c("d1", 0.9)]).unwrap(),
            scores(&[("d1", 0.9)])
        );
    }

    #[test]
    fn mixed_keywords_rejected() {
        let mut other = c("A", 0.2);
        other.kw_id = "KW2".into();
        assert!(matches!(
            sum_document_scores(&[c("A", 0.5), other]),
            Err(Error::MixedKeywords { .. })
        ));
    }

    #[test]
    fn relative_to_max_weights() {
        let t = document_ranking_weights("KW1", &scores(&[("A", 0.8), ("B", 0.4)])).unwrap();
        assert_eq!(t.max_score, 0.8);
        assert_eq!(t.weight("A"), Some(1.0));
        assert_eq!(t.weight("B"), Some(0.5));

        let t = document_ranking_weights("KW1", &scores(&[("d1", 0.9)])).unwrap();
        assert_eq!(t.weight("d1"), Some(1.0));

        let t = document_ranking_weights("KW1", &scores(&[("x", 2.0), ("y", 1.0), ("z", 0.5)]))
            .unwrap();
        assert_eq!(
            [t.weight("x"), t.weight("y"), t.weight("z")],
            [Some(1.0), Some(0.5), Some(0.25)]
        );
    }

    #[test]
    fn empty_and_nonpositive_inputs() {
        let t = document_ranking_weights("KW1", &BTreeMap::new()).unwrap();
        assert!(t.is_empty());
        assert!(matches!(
            document_ranking_weights("KW1", &scores(&[("A", 0.8), ("B", 0.0)])),
            Err(Error::NonPositiveScore { .. })
        ));
        assert!(matches!(
            rescore_candidates(&[c("A", 0.0)], &RescoreConfig::new(0.1).unwrap()),
            Err(Error::NonPositiveScore { .. })
        ));
    }

    #[test]
    fn interpolation_arithmetic() {
        let t = document_ranking_weights("KW1", &scores(&[("A", 1.0), ("B", 0.5)])).unwrap();
        let r = reestimate_confidence(&c("A", 0.5), &t, &RescoreConfig::new(0.1).unwrap()).unwrap();
        assert!((r.score - 0.55).abs() < 1e-15);
        let r = reestimate_confidence(&c("A", 0.5), &t, &RescoreConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(r.score, 0.5);
        // English-task coefficient
        let r =
            reestimate_confidence(&c("B", 0.8), &t, &RescoreConfig::new(0.15).unwrap()).unwrap();
        assert!((r.score - 0.755).abs() < 1e-15);
    }

    #[test]
    fn missing_document_is_an_error() {
        let t = document_ranking_weights("KW1", &scores(&[("A", 1.0)])).unwrap();
        assert!(matches!(
            reestimate_confidence(&c("Z", 0.5), &t, &RescoreConfig::new(0.1).unwrap()),
            Err(Error::MissingDocWeight { .. })
        ));
    }

    #[test]
    fn alpha_validated() {
        assert!(RescoreConfig::new(-0.01).is_err());
        assert!(RescoreConfig::new(1.01).is_err());
        assert!(RescoreConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn alpha_boundaries() {
        let cands = vec![c("A", 0.5), c("A", 0.3), c("B", 0.4)];
        let (same, _) = rescore_candidates(&cands, &RescoreConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(same, cands);
        let (one, tables) = rescore_candidates(&cands, &RescoreConfig::new(1.0).unwrap()).unwrap();
        assert_eq!(one[0].score, 1.0);
        assert_eq!(one[1].score, 1.0);
        assert_eq!(one[2].score, tables["KW1"].weight("B").unwrap());
    }

    #[test]
    fn weight_table_tsv() {
        let (_, tables) = rescore_candidates(
            &[c("A", 0.5), c("B", 0.25)],
            &RescoreConfig::new(0.1).unwrap(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.tsv");
        write_weight_tables(&p, &tables).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(
            text,
            "# kw_id\tdoc_id\tS_d\tW_d\nKW1\tA\t0.5\t1\nKW1\tB\t0.25\t0.5\n"
        );
    }

    fn arb_candidates() -> impl Strategy<Value = Vec<Candidate>> {
        prop::collection::vec((0usize..3, 0usize..6, 1e-6f64..=1.0), 1..60).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (k, d, s))| {
                    Candidate::new(&format!("KW{k}"), &format!("d{d}"), i as f64, 0.5, s)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn range_preserved(alpha in 0.0f64..=1.0, w in 0.0f64..=1.0, cm in 0.0f64..=1.0) {
            let t = DocWeightTable {
                kw_id: "KW1".into(),
                entries: [("A".to_string(), DocWeight { doc_score: w, weight: w })].into(),
                max_score: 1.0,
            };
            let r = reestimate_confidence(&c("A", cm), &t, &RescoreConfig::new(alpha).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.score));
        }

        #[test]
        fn weight_table_max_is_one(cands in arb_candidates()) {
            let (_, tables) = rescore_candidates(&cands, &RescoreConfig::new(0.5).unwrap()).unwrap();
            for t in tables.values() {
                let max = t.entries.values().map(|e| e.weight).fold(0.0, f64::max);
                prop_assert_eq!(max, 1.0);
                for e in t.entries.values() {
                    prop_assert!((e.weight - e.doc_score / t.max_score).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn weights_scale_invariant(cands in arb_candidates(), scale in 0.01f64..=1.0) {
            let scaled: Vec<Candidate> = cands.iter().map(|c| Candidate { score: c.score * scale, ..c.clone() }).collect();
            let cfg = RescoreConfig::new(0.3).unwrap();
            let (_, a) = rescore_candidates(&cands, &cfg).unwrap();
            let (_, b) = rescore_candidates(&scaled, &cfg).unwrap();
            for (kw, ta) in &a {
                for (doc, ea) in &ta.entries {
                    let eb = b[kw].entries[doc];
                    prop_assert!((ea.weight - eb.weight).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn within_document_order_preserved(cands in arb_candidates(), alpha in 0.0f64..0.999) {
            let (out, _) = rescore_candidates(&cands, &RescoreConfig::new(alpha).unwrap()).unwrap();
            for i in 0..cands.len() {
                for j in 0..cands.len() {
                    let (a, b) = (&cands[i], &cands[j]);
                    if a.kw_id == b.kw_id && a.doc_id == b.doc_id && a.score > b.score {
                        prop_assert!(out[i].score >= out[j].score);
                    }
                }
            }
        }

        #[test]
        fn own_score_monotone(cands in arb_candidates(), pick in 0usize..60, bump in 0.0f64..0.5, alpha in 0.0f64..=1.0) {
            let i = pick % cands.len();
            let mut raised = cands.clone();
            raised[i].score = (raised[i].score + bump).min(1.0);
            let cfg = RescoreConfig::new(alpha).unwrap();
            let (before, _) = rescore_candidates(&cands, &cfg).unwrap();
            let (after, _) = rescore_candidates(&raised, &cfg).unwrap();
            prop_assert!(after[i].score >= before[i].score - 1e-15);
        }

        #[test]
        fn alpha_one_is_document_constant(cands in arb_candidates()) {
            let (out, _) = rescore_candidates(&cands, &RescoreConfig::new(1.0).unwrap()).unwrap();
            for (a, ra) in cands.iter().zip(&out) {
                for (b, rb) in cands.iter().zip(&out) {
                    if a.kw_id == b.kw_id && a.doc_id == b.doc_id {
                        prop_assert_eq!(ra.score, rb.score);
                    }
                }
            }
        }
    }
}
