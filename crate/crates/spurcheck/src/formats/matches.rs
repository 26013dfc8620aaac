//! Match records, one JSON object per line, and a human-readable dump that
//! shows each pair as two bracketed context windows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use spurcheck_core::contexts::ContextWindow;
use spurcheck_core::corpus::Label;
use spurcheck_core::matcher::MatchRecord;

use super::{read_jsonl, require_header};
use crate::artifact::{write_atomic, Provenance};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    word: String,
    treated_context_id: u64,
    treated_sentence_id: u64,
    treated_label: i64,
    matched_context_id: u64,
    matched_sentence_id: u64,
    matched_label: i64,
    matched_word: String,
    similarity: f64,
}

impl From<&MatchRecord> for Record {
    fn from(r: &MatchRecord) -> Self {
        Record {
            word: r.word.clone(),
            treated_context_id: r.treated_context_id,
            treated_sentence_id: r.treated_sentence_id,
            treated_label: i64::from(r.treated_label.sign()),
            matched_context_id: r.matched_context_id,
            matched_sentence_id: r.matched_sentence_id,
            matched_label: i64::from(r.matched_label.sign()),
            matched_word: r.matched_word.clone(),
            similarity: r.similarity,
        }
    }
}

pub fn to_string(records: &[MatchRecord], prov: &Provenance) -> String {
    let mut out = prov.json_line("matches");
    for r in records {
        out += &serde_json::to_string(&Record::from(r)).expect("record serializes");
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, records: &[MatchRecord], prov: &Provenance) -> Result<()> {
    write_atomic(path, to_string(records, prov).as_bytes())
}

pub fn read(path: &Path) -> Result<(Provenance, Vec<MatchRecord>)> {
    let (header, rows) = read_jsonl::<Record>(path)?;
    let prov = require_header(path, header)?;
    let label = |v: i64, line: usize| Label::from_sign(v).ok_or_else(|| Error::parse(path, line, format!("label must be -1 or 1, got {v}")));
    let mut out = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        out.push(MatchRecord {
            treated_label: label(r.treated_label, line)?,
            matched_label: label(r.matched_label, line)?,
            word: r.word,
            treated_context_id: r.treated_context_id,
            treated_sentence_id: r.treated_sentence_id,
            matched_context_id: r.matched_context_id,
            matched_sentence_id: r.matched_sentence_id,
            matched_word: r.matched_word,
            similarity: r.similarity,
        });
    }
    Ok((prov, out))
}

/// `left … [word] right …` for one window.
pub fn bracketed(w: &ContextWindow) -> String {
    let mut parts: Vec<String> = w.left.clone();
    parts.push(format!("[{}]", w.word));
    parts.extend(w.right.iter().cloned());
    parts.join(" ")
}

fn signed(label: Label) -> &'static str {
    match label {
        Label::Positive => "+1",
        Label::Negative => "-1",
    }
}

/// One block per pair:
///
/// ```text
/// word  sim 0.9812
///   +1  it's [refreshing] to see a movie that
///   +1  it's [rare] to see a movie that
/// ```
pub fn dump(records: &[MatchRecord], windows: &[ContextWindow], prov: &Provenance) -> String {
    let by_id: BTreeMap<u64, &ContextWindow> = windows.iter().map(|w| (w.context_id, w)).collect();
    let show = |id: u64| by_id.get(&id).map_or_else(|| format!("<context {id}>"), |w| bracketed(w));
    let mut out = prov.comment_line("matches_dump");
    for r in records {
        let _ = writeln!(out, "\n{}  sim {:.4}", r.word, r.similarity);
        let _ = writeln!(out, "  {}  {}", signed(r.treated_label), show(r.treated_context_id));
        let _ = writeln!(out, "  {}  {}", signed(r.matched_label), show(r.matched_context_id));
    }
    out
}
