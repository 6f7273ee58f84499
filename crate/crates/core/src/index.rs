//! Inverted index over confusion networks and one-pass keyword search.
//!
//! Every non-`<eps>` arc becomes one [`Posting`] under its token. Search
//! starts from the postings of a keyword's first token and walks forward
//! through consecutive slots; between two matched tokens any number of
//! slots may be skipped through their `<eps>` arc. A hit's score is the
//! product of every traversed arc posterior, skipped `<eps>` arcs included.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus_io::{sort_candidates, Candidate, ConfusionNetworkDoc, KeywordEntry, EPS};
use crate::error::{Error, Result};

const CACHE_MAGIC: &[u8; 8] = b"DRSTDIDX";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_ref: usize,
    pub slot_ref: usize,
    pub arc_ref: usize,
    pub posterior: f64,
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    token_map: BTreeMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    #[serde(skip)]
    doc_refs: HashMap<String, usize>,
    fingerprint: String,
}

impl InvertedIndex {
    pub fn postings(&self, token: &str) -> &[Posting] {
        self.token_map.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.token_map.keys().map(String::as_str)
    }

    pub fn posting_count(&self) -> usize {
        self.token_map.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.token_map.is_empty()
    }

    pub fn doc_id(&self, doc_ref: usize) -> &str {
        &self.doc_ids[doc_ref]
    }

    pub fn doc_ref(&self, doc_id: &str) -> Option<usize> {
        self.doc_refs.get(doc_id).copied()
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    /// Hex SHA-256 of the corpus content the index was built from.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

/// Content hash of a corpus. Covers ids, times, tokens and posterior bits.
pub fn corpus_fingerprint(corpus: &[ConfusionNetworkDoc]) -> String {
    let mut h = Sha256::new();
    h.update((corpus.len() as u64).to_le_bytes());
    for doc in corpus {
        h.update((doc.doc_id.len() as u64).to_le_bytes());
        h.update(doc.doc_id.as_bytes());
        h.update((doc.slots.len() as u64).to_le_bytes());
        for slot in &doc.slots {
            h.update(slot.start.to_bits().to_le_bytes());
            h.update(slot.duration.to_bits().to_le_bytes());
            h.update((slot.arcs.len() as u64).to_le_bytes());
            for arc in &slot.arcs {
                h.update((arc.token.len() as u64).to_le_bytes());
                h.update(arc.token.as_bytes());
                h.update(arc.posterior.to_bits().to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}

pub fn build_index(corpus: &[ConfusionNetworkDoc]) -> InvertedIndex {
    let mut token_map: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    // documents, slots and arcs are visited in order, so each posting list
    // comes out sorted by (doc_ref, slot_ref)
    for (doc_ref, doc) in corpus.iter().enumerate() {
        for (slot_ref, slot) in doc.slots.iter().enumerate() {
            for (arc_ref, arc) in slot.arcs.iter().enumerate() {
                if arc.is_eps() {
                    continue;
                }
                token_map
                    .entry(arc.token.clone())
                    .or_default()
                    .push(Posting {
                        doc_ref,
                        slot_ref,
                        arc_ref,
                        posterior: arc.posterior,
                        start: slot.start,
                        duration: slot.duration,
                    });
            }
        }
    }
    let doc_ids: Vec<String> = corpus.iter().map(|d| d.doc_id.clone()).collect();
    let doc_refs = doc_ids
        .iter()
        .enumerate()
        .map(|(i, d)| (d.clone(), i))
        .collect();
    InvertedIndex {
        token_map,
        doc_ids,
        doc_refs,
        fingerprint: corpus_fingerprint(corpus),
    }
}

/// All hits of one keyword, sorted by (doc_id, start).
///
/// `corpus` must be the corpus the index was built from.
pub fn search_keyword(
    index: &InvertedIndex,
    corpus: &[ConfusionNetworkDoc],
    keyword: &KeywordEntry,
) -> Vec<Candidate> {
    debug_assert_eq!(index.num_docs(), corpus.len());
    let Some((first, rest)) = keyword.tokens.split_first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for posting in index.postings(first) {
        let doc = &corpus[posting.doc_ref];
        debug_assert_eq!(doc.doc_id, index.doc_id(posting.doc_ref));
        let mut walk = Walk {
            keyword,
            doc,
            start: posting.start,
            out: &mut out,
        };
        walk.extend(
            posting.slot_ref + 1,
            rest,
            posting.posterior,
            posting.start + posting.duration,
        );
    }
    out.sort_by(|a, b| {
        a.doc_id
            .cmp(&b.doc_id)
            .then_with(|| a.start.total_cmp(&b.start))
            .then_with(|| a.duration.total_cmp(&b.duration))
            .then_with(|| b.score.total_cmp(&a.score))
    });
    out
}

struct Walk<'a> {
    keyword: &'a KeywordEntry,
    doc: &'a ConfusionNetworkDoc,
    start: f64,
    out: &'a mut Vec<Candidate>,
}

impl Walk<'_> {
    fn extend(&mut self, next_slot: usize, remaining: &[String], score: f64, end: f64) {
        let Some((want, rest)) = remaining.split_first() else {
            self.out.push(Candidate::new(
                &self.keyword.kw_id,
                &self.doc.doc_id,
                self.start,
                end - self.start,
                score,
            ));
            return;
        };
        let Some(slot) = self.doc.slots.get(next_slot) else {
            return;
        };
        for arc in &slot.arcs {
            if arc.token == *want {
                self.extend(next_slot + 1, rest, score * arc.posterior, slot.end());
            } else if arc.token == EPS {
                self.extend(next_slot + 1, remaining, score * arc.posterior, end);
            }
        }
    }
}

/// Search every keyword; result sorted by (kw_id, doc_id, start).
///
/// Keywords are searched in parallel on the current rayon pool; the final
/// sort makes the output independent of scheduling.
pub fn search_all(
    index: &InvertedIndex,
    corpus: &[ConfusionNetworkDoc],
    keywords: &[KeywordEntry],
) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = keywords
        .par_iter()
        .flat_map_iter(|kw| search_keyword(index, corpus, kw))
        .collect();
    sort_candidates(&mut out);
    out
}

/// Two hits collide when they start together or their overlap exceeds half
/// of the shorter interval.
pub fn intervals_collide(a: &Candidate, b: &Candidate) -> bool {
    if a.start == b.start {
        return true;
    }
    let overlap = a.end().min(b.end()) - a.start.max(b.start);
    overlap > 0.5 * a.duration.min(b.duration)
}

/// Keep only the best hit among colliding hits of the same keyword and
/// document. Best means highest score, then earliest start.
pub fn dedup_overlaps(candidates: &[Candidate]) -> Vec<Candidate> {
    let mut groups: BTreeMap<(&str, &str), Vec<&Candidate>> = BTreeMap::new();
    for c in candidates {
        groups.entry((&c.kw_id, &c.doc_id)).or_default().push(c);
    }
    let mut out = Vec::with_capacity(candidates.len());
    for (_, mut group) in groups {
        group.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.start.total_cmp(&b.start))
                .then_with(|| a.duration.total_cmp(&b.duration))
        });
        let mut kept: Vec<&Candidate> = Vec::new();
        for c in group {
            if kept.iter().all(|k| !intervals_collide(k, c)) {
                kept.push(c);
            }
        }
        out.extend(kept.into_iter().cloned());
    }
    sort_candidates(&mut out);
    out
}

/// Write a version-tagged cache: magic, version, then the JSON-encoded index.
pub fn save_index(path: &Path, index: &InvertedIndex) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let body = serde_json::to_vec(index).expect("index serializes");
    out.write_all(CACHE_MAGIC)
        .and_then(|_| out.write_all(&CACHE_VERSION.to_le_bytes()))
        .and_then(|_| out.write_all(&body))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Load a cache written by [`save_index`], checking that it was built from
/// a corpus with the given fingerprint.
pub fn load_index(path: &Path, expected_fingerprint: &str) -> Result<InvertedIndex> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[..8] != CACHE_MAGIC {
        return Err(Error::IndexCache(format!(
            "{}: not an index cache",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(Error::IndexCache(format!(
            "{}: version {version}, expected {CACHE_VERSION}",
            path.display()
        )));
    }
    let mut index: InvertedIndex = serde_json::from_slice(&bytes[12..])
        .map_err(|e| Error::IndexCache(format!("{}: corrupt ({e})", path.display())))?;
    if index.fingerprint != expected_fingerprint {
        return Err(Error::IndexCache(format!(
            "{}: built from a different corpus (fingerprint {}, corpus {}); rebuild with `drstd index`",
            path.display(),
            index.fingerprint,
            expected_fingerprint
        )));
    }
    index.doc_refs = index
        .doc_ids
        .iter()
        .enumerate()
        .map(|(i, d)| (d.clone(), i))
        .collect();
    Ok(index)
}
