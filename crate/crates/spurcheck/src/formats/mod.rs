//! On-disk formats for every pipeline artifact.

pub mod corpus;
pub mod embeddings;
pub mod matches;
pub mod model;
pub mod tables;

use std::path::Path;

use crate::artifact::{read_to_string, Provenance};
use crate::error::{Error, Result};

/// A line-delimited artifact: its provenance header, if any, and body rows
/// with their 1-based line numbers.
pub(crate) type Jsonl<T> = (Option<Provenance>, Vec<(usize, T)>);

/// Splits a line-delimited artifact into its header and numbered body
/// lines (1-based, counting the header). Blank lines are skipped.
pub(crate) fn jsonl_body(text: &str) -> Result<Jsonl<String>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut body = Vec::new();
    let mut header = None;
    if let Some((n, first)) = lines.next() {
        match Provenance::parse(first) {
            Some((_, p)) => header = Some(p),
            None if !first.trim().is_empty() => body.push((n, first.to_string())),
            None => {}
        }
    }
    body.extend(lines.filter(|(_, l)| !l.trim().is_empty()).map(|(n, l)| (n, l.to_string())));
    Ok((header, body))
}

/// Parsed body rows with their line numbers.
pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Jsonl<T>> {
    let text = read_to_string(path)?;
    let (header, body) = jsonl_body(&text)?;
    let rows = body
        .into_iter()
        .map(|(n, l)| serde_json::from_str(&l).map(|v| (n, v)).map_err(|e| Error::parse(path, n, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

pub(crate) fn require_header(path: &Path, header: Option<Provenance>) -> Result<Provenance> {
    header.ok_or_else(|| Error::parse(path, 1, "missing spurcheck provenance header"))
}
