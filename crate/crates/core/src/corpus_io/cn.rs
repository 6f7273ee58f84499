use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_token, ConfusionNetworkDoc, Slot, WordArc, EPS};
use crate::error::{Error, Result};

/// Allowed deviation of a slot's posterior sum from 1.
pub const POSTERIOR_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Serialize, Deserialize)]
struct RawDoc {
    doc_id: String,
    slots: Vec<RawSlot>,
}

#[derive(Serialize, Deserialize)]
struct RawSlot {
    start: f64,
    dur: f64,
    arcs: Vec<(String, f64)>,
}

pub fn parse_cn_corpus(path: &Path) -> Result<Vec<ConfusionNetworkDoc>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cn_corpus(BufReader::new(file), &path.display().to_string())
}

/// Read a JSON-lines confusion-network corpus. `source_name` only labels errors.
pub fn read_cn_corpus<R: BufRead>(
    reader: R,
    source_name: &str,
) -> Result<Vec<ConfusionNetworkDoc>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(Path::new(source_name), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDoc = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source_name, lineno, format!("malformed document: {e}")))?;
        let doc = validate_doc(raw).map_err(|msg| Error::parse(source_name, lineno, msg))?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("duplicate doc_id {:?}", doc.doc_id),
            ));
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn validate_doc(raw: RawDoc) -> std::result::Result<ConfusionNetworkDoc, String> {
    if raw.doc_id.is_empty() || raw.doc_id.contains(char::is_whitespace) {
        return Err(format!("invalid doc_id {:?}", raw.doc_id));
    }
    let mut slots = Vec::with_capacity(raw.slots.len());
    let mut prev_start = f64::NEG_INFINITY;
    for (i, rs) in raw.slots.into_iter().enumerate() {
        if !rs.start.is_finite() || !rs.dur.is_finite() {
            return Err(format!("slot {i}: non-finite time"));
        }
        if rs.start < prev_start {
            return Err(format!(
                "slot {i}: start {} precedes previous slot start {prev_start}",
                rs.start
            ));
        }
        prev_start = rs.start;
        if rs.dur < 0.0 {
            return Err(format!("slot {i}: negative duration {}", rs.dur));
        }
        if rs.arcs.is_empty() {
            return Err(format!("slot {i}: no arcs"));
        }
        let mut arcs = Vec::with_capacity(rs.arcs.len());
        let mut sum = 0.0;
        let mut eps_count = 0;
        for (token, posterior) in rs.arcs {
            let token = normalize_token(&token);
            if token.is_empty() {
                return Err(format!("slot {i}: empty token"));
            }
            if !(posterior > 0.0 && posterior <= 1.0) {
                return Err(format!(
                    "slot {i}: posterior {posterior} of {token:?} outside (0, 1]"
                ));
            }
            if token == EPS {
                eps_count += 1;
            }
            sum += posterior;
            arcs.push(WordArc { token, posterior });
        }
        if eps_count > 1 {
            return Err(format!("slot {i}: {EPS} appears {eps_count} times"));
        }
        if (sum - 1.0).abs() > POSTERIOR_SUM_TOLERANCE {
            return Err(format!("slot {i}: posterior sum {sum} differs from 1"));
        }
        slots.push(Slot {
            start: rs.start,
            duration: rs.dur,
            arcs,
        });
    }
    Ok(ConfusionNetworkDoc {
        doc_id: raw.doc_id,
        slots,
    })
}

pub fn write_cn_corpus(path: &Path, corpus: &[ConfusionNetworkDoc]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in corpus {
        let raw = RawDoc {
            doc_id: doc.doc_id.clone(),
            slots: doc
                .slots
                .iter()
                .map(|s| RawSlot {
                    start: s.start,
                    dur: s.duration,
                    arcs: s
                        .arcs
                        .iter()
                        .map(|a| (a.token.clone(), a.posterior))
                        .collect(),
                })
                .collect(),
        };
        let line = serde_json::to_string(&raw).expect("corpus documents serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
