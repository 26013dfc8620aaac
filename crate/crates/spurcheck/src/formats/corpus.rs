//! Canonical corpus: one JSON object per sentence after a provenance line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use spurcheck_core::corpus::{Corpus, Label, LabeledSentence, Split};

use super::{read_jsonl, require_header};
use crate::artifact::{write_atomic, Provenance};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: u64,
    label: i64,
    split: String,
    tokens: Vec<String>,
}

pub fn to_string(corpus: &Corpus, prov: &Provenance) -> String {
    let mut out = prov.json_line("corpus");
    for s in &corpus.sentences {
        let r = Record { id: s.id, label: i64::from(s.label.sign()), split: s.split.as_str().into(), tokens: s.tokens.clone() };
        out.push_str(&serde_json::to_string(&r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, corpus: &Corpus, prov: &Provenance) -> Result<()> {
    write_atomic(path, to_string(corpus, prov).as_bytes())
}

pub fn read(path: &Path, name: &str) -> Result<(Provenance, Corpus)> {
    let (header, rows) = read_jsonl::<Record>(path)?;
    let prov = require_header(path, header)?;
    let mut sentences = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let label = Label::from_sign(r.label).ok_or_else(|| Error::parse(path, line, format!("label must be -1 or 1, got {}", r.label)))?;
        let split: Split = r.split.parse().map_err(|e: spurcheck_core::Error| Error::parse(path, line, e.to_string()))?;
        sentences.push(LabeledSentence { id: r.id, tokens: r.tokens, label, split });
    }
    Ok((prov, Corpus::new(name, sentences)))
}
