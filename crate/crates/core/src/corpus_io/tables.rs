use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{
    normalize_token, sort_candidates, Candidate, Decision, KeywordEntry, RefOccurrence, EPS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccurrenceKind {
    Reference,
    Candidate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OccurrenceTable {
    References(Vec<RefOccurrence>),
    Candidates(Vec<Candidate>),
}

/// Render a score with six decimals. Positive scores too small to survive
/// the rounding are written as the smallest representable positive value so
/// that a hit never turns into a zero-mass candidate on disk.
pub fn format_score(score: f64) -> String {
    if score > 0.0 && score < 5e-7 {
        "0.000001".to_string()
    } else {
        format!("{score:.6}")
    }
}

/// The value a score takes after a write/parse cycle.
pub fn quantize_score(score: f64) -> f64 {
    format_score(score).parse().expect("formatted score parses")
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Yields (1-based line number, tab-split fields) for every data line.
fn data_lines<'a, R: BufRead + 'a>(
    reader: R,
    source_name: &'a str,
) -> impl Iterator<Item = Result<(usize, Vec<String>)>> + 'a {
    reader.lines().enumerate().filter_map(move |(idx, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::io(Path::new(source_name), e))),
        };
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            return None;
        }
        Some(Ok((
            idx + 1,
            trimmed.split('\t').map(str::to_string).collect(),
        )))
    })
}

fn parse_f64(field: &str, what: &str, source_name: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        Error::parse(
            source_name,
            line,
            format!("{what} {field:?} is not a number"),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::parse(
            source_name,
            line,
            format!("{what} {field:?} is not finite"),
        ));
    }
    Ok(v)
}

fn parse_id(field: &str, what: &str, source_name: &str, line: usize) -> Result<String> {
    let id = field.trim();
    if id.is_empty() {
        return Err(Error::parse(source_name, line, format!("empty {what}")));
    }
    Ok(id.to_string())
}

pub fn parse_keyword_list(path: &Path) -> Result<Vec<KeywordEntry>> {
    read_keyword_list(open(path)?, &path.display().to_string())
}

pub fn read_keyword_list<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<KeywordEntry>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in data_lines(reader, source_name) {
        let (line, fields) = row?;
        if fields.len() != 2 {
            return Err(Error::parse(
                source_name,
                line,
                format!("expected 2 columns (kw_id, text), found {}", fields.len()),
            ));
        }
        let kw_id = parse_id(&fields[0], "kw_id", source_name, line)?;
        let tokens: Vec<String> = fields[1].split_whitespace().map(normalize_token).collect();
        if tokens.is_empty() {
            return Err(Error::parse(
                source_name,
                line,
                format!("keyword {kw_id} has blank text"),
            ));
        }
        if tokens.iter().any(|t| t == EPS) {
            return Err(Error::parse(
                source_name,
                line,
                format!("keyword {kw_id} contains {EPS}"),
            ));
        }
        if !seen.insert(kw_id.clone()) {
            return Err(Error::parse(
                source_name,
                line,
                format!("duplicate kw_id {kw_id}"),
            ));
        }
        out.push(KeywordEntry { kw_id, tokens });
    }
    Ok(out)
}

pub fn parse_occurrence_table(path: &Path, kind: OccurrenceKind) -> Result<OccurrenceTable> {
    let source_name = path.display().to_string();
    let reader = open(path)?;
    Ok(match kind {
        OccurrenceKind::Reference => {
            OccurrenceTable::References(read_references(reader, &source_name)?)
        }
        OccurrenceKind::Candidate => {
            OccurrenceTable::Candidates(read_candidates(reader, &source_name)?)
        }
    })
}

pub fn parse_references(path: &Path) -> Result<Vec<RefOccurrence>> {
    read_references(open(path)?, &path.display().to_string())
}

pub fn parse_candidates(path: &Path) -> Result<Vec<Candidate>> {
    read_candidates(open(path)?, &path.display().to_string())
}

pub fn read_references<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<RefOccurrence>> {
    let mut out = Vec::new();
    for row in data_lines(reader, source_name) {
        let (line, f) = row?;
        if f.len() != 4 {
            return Err(Error::parse(
                source_name,
                line,
                format!(
                    "expected 4 columns (kw_id, doc_id, start, dur), found {}",
                    f.len()
                ),
            ));
        }
        let duration = parse_f64(&f[3], "duration", source_name, line)?;
        if duration <= 0.0 {
            return Err(Error::parse(
                source_name,
                line,
                format!("reference duration {duration} must be positive"),
            ));
        }
        out.push(RefOccurrence {
            kw_id: parse_id(&f[0], "kw_id", source_name, line)?,
            doc_id: parse_id(&f[1], "doc_id", source_name, line)?,
            start: parse_f64(&f[2], "start", source_name, line)?,
            duration,
        });
    }
    Ok(out)
}

pub fn read_candidates<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for row in data_lines(reader, source_name) {
        let (line, f) = row?;
        if f.len() != 5 && f.len() != 6 {
            return Err(Error::parse(
                source_name,
                line,
                format!(
                    "expected 5 or 6 columns (kw_id, doc_id, start, dur, score[, decision]), found {}",
                    f.len()
                ),
            ));
        }
        let duration = parse_f64(&f[3], "duration", source_name, line)?;
        if duration < 0.0 {
            return Err(Error::parse(
                source_name,
                line,
                format!("negative duration {duration}"),
            ));
        }
        let score = parse_f64(&f[4], "score", source_name, line)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::parse(
                source_name,
                line,
                format!("score {score} outside [0, 1]"),
            ));
        }
        let decision = match f.get(5).map(|s| s.trim()) {
            None => None,
            Some("YES") => Some(Decision::Yes),
            Some("NO") => Some(Decision::No),
            Some(other) => {
                return Err(Error::parse(
                    source_name,
                    line,
                    format!("decision {other:?} is neither YES nor NO"),
                ))
            }
        };
        out.push(Candidate {
            kw_id: parse_id(&f[0], "kw_id", source_name, line)?,
            doc_id: parse_id(&f[1], "doc_id", source_name, line)?,
            start: parse_f64(&f[2], "start", source_name, line)?,
            duration,
            score,
            decision,
        });
    }
    Ok(out)
}

fn write_lines<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Write candidates sorted by (kw_id, doc_id, start), scores at six decimals.
pub fn write_candidates(path: &Path, candidates: &[Candidate]) -> Result<()> {
    let mut sorted = candidates.to_vec();
    sort_candidates(&mut sorted);
    write_lines(path, |out| {
        writeln!(out, "# kw_id\tdoc_id\tstart\tdur\tscore\tdecision")?;
        for c in &sorted {
            write!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                c.kw_id,
                c.doc_id,
                c.start,
                c.duration,
                format_score(c.score)
            )?;
            match c.decision {
                Some(d) => writeln!(out, "\t{d}")?,
                None => writeln!(out)?,
            }
        }
        Ok(())
    })
}

pub fn write_references(path: &Path, refs: &[RefOccurrence]) -> Result<()> {
    write_lines(path, |out| {
        writeln!(out, "# kw_id\tdoc_id\tstart\tdur")?;
        for r in refs {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.kw_id, r.doc_id, r.start, r.duration
            )?;
        }
        Ok(())
    })
}

pub fn write_keyword_list(path: &Path, keywords: &[KeywordEntry]) -> Result<()> {
    write_lines(path, |out| {
        for k in keywords {
            writeln!(out, "{}\t{}", k.kw_id, k.tokens.join(" "))?;
        }
        Ok(())
    })
}
