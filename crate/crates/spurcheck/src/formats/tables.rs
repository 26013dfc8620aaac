//! CSV tables. Derived tables start with a `# spurcheck …` provenance
//! comment; the hand-maintained labels file has none.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use spurcheck_core::corpus::Label;
use spurcheck_core::docmodel::{TopWord, TopWordSet};
use spurcheck_core::matcher::MatchDiagnostics;
use spurcheck_core::robustness::{CurvePoint, ReferenceLine, Strategy};
use spurcheck_core::wordclf::{WordClass, WordLabel};
use spurcheck_core::wordfeat::{WordFeatureVector, FEATURE_NAMES, N_FEATURES};

use crate::artifact::{read_provenance, read_to_string, write_atomic, Provenance};
use crate::error::{Error, Result};

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, e.to_string())
}

/// A row type with a fixed header, so empty tables still get one.
pub trait Table: Serialize {
    const COLUMNS: &'static [&'static str];
}

/// Serializes rows under a provenance comment.
pub fn table_to_string<T: Table>(kind: &str, prov: &Provenance, rows: &[T]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(T::COLUMNS).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    prov.comment_line(kind) + &String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

pub fn write_table<T: Table>(path: &Path, kind: &str, prov: &Provenance, rows: &[T]) -> Result<()> {
    write_atomic(path, table_to_string(kind, prov, rows).as_bytes())
}

/// Reads a table; `#` lines are skipped.
pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

/// Reads a derived table and its provenance.
pub fn read_derived<T: DeserializeOwned>(path: &Path) -> Result<(Provenance, Vec<T>)> {
    Ok((read_provenance(path)?, read_table(path)?))
}

fn class_sign(label: Label) -> i8 {
    label.sign()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopWordRow {
    pub word: String,
    pub coef: f64,
    pub class: i8,
}

impl Table for TopWordRow {
    const COLUMNS: &'static [&'static str] = &["word", "coef", "class"];
}

pub fn top_word_rows(top: &TopWordSet) -> Vec<TopWordRow> {
    top.entries.iter().map(|t| TopWordRow { word: t.word.clone(), coef: t.coef, class: class_sign(t.class) }).collect()
}

pub fn read_top_words(path: &Path) -> Result<(Provenance, TopWordSet)> {
    let (prov, rows) = read_derived::<TopWordRow>(path)?;
    let entries = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let class = Label::from_sign(i64::from(r.class))
                .ok_or_else(|| Error::parse(path, i + 3, format!("class must be -1 or 1, got {}", r.class)))?;
            Ok(TopWord { word: r.word, coef: r.coef, class })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((prov, TopWordSet { entries }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub word: String,
    pub occurrences: usize,
    pub matched: usize,
    pub unmatched: usize,
    /// Empty when the word has no matches.
    pub ate: Option<f64>,
}

impl Table for SummaryRow {
    const COLUMNS: &'static [&'static str] = &["word", "occurrences", "matched", "unmatched", "ate"];
}

/// One row per top word, in top-word order.
pub fn summary_rows(top: &TopWordSet, diag: &MatchDiagnostics, ate: &BTreeMap<String, f64>) -> Vec<SummaryRow> {
    top.words()
        .map(|w| {
            let occurrences = diag.treated.get(w).copied().unwrap_or(0);
            let unmatched = diag.unmatched.get(w).copied().unwrap_or(0);
            SummaryRow {
                word: w.to_string(),
                occurrences,
                matched: occurrences - unmatched,
                unmatched,
                ate: ate.get(w).copied(),
            }
        })
        .collect()
}

/// `word, <15 features>, n_matches`; floats in shortest round-trip form.
pub fn features_to_string(features: &[WordFeatureVector], prov: &Provenance) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["word"];
    header.extend(FEATURE_NAMES);
    header.push("n_matches");
    w.write_record(&header).expect("in-memory write");
    for f in features {
        let mut rec = vec![f.word.clone()];
        rec.extend(f.values.iter().map(|v| v.to_string()));
        rec.push(f.n_matches.to_string());
        w.write_record(&rec).expect("in-memory write");
    }
    prov.comment_line("features") + &String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

/// Features with the missing-class flags restored from the diagnostics
/// table when it is given.
pub fn read_features(path: &Path, diagnostics: Option<&Path>) -> Result<(Provenance, Vec<WordFeatureVector>)> {
    let prov = read_provenance(path)?;
    let text = read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() != N_FEATURES + 2 || names[0] != "word" || names[1..=N_FEATURES] != FEATURE_NAMES || names[N_FEATURES + 1] != "n_matches" {
        return Err(spurcheck_core::Error::SchemaMismatch(format!("{} has columns {:?}", path.display(), names)).into());
    }
    let flags: BTreeMap<String, (bool, bool)> = match diagnostics {
        Some(p) => read_table::<DiagnosticRow>(p)?.into_iter().map(|d| (d.word, (d.missing_pos, d.missing_neg))).collect(),
        None => BTreeMap::new(),
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut values = [0.0; N_FEATURES];
        for (j, v) in values.iter_mut().enumerate() {
            *v = crate::artifact::parse_f64(&rec[j + 1], path, line)?;
        }
        let word = rec[0].to_string();
        let n_matches = rec[N_FEATURES + 1].parse().map_err(|_| Error::parse(path, line, "n_matches must be an integer"))?;
        let (missing_pos, missing_neg) = flags.get(&word).copied().unwrap_or((false, false));
        out.push(WordFeatureVector { word, values, n_matches, missing_pos, missing_neg });
    }
    Ok((prov, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub word: String,
    pub missing_pos: bool,
    pub missing_neg: bool,
}

impl Table for DiagnosticRow {
    const COLUMNS: &'static [&'static str] = &["word", "missing_pos", "missing_neg"];
}

pub fn diagnostic_rows(features: &[WordFeatureVector]) -> Vec<DiagnosticRow> {
    features
        .iter()
        .map(|f| DiagnosticRow { word: f.word.clone(), missing_pos: f.missing_pos, missing_neg: f.missing_neg })
        .collect()
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    word: String,
    label: String,
    #[serde(default)]
    note: Option<String>,
}

/// `word,label[,note]` with labels `spurious`/`genuine`. A header row is
/// optional. A word listed twice keeps its last label, so corrections can
/// simply be appended.
pub fn read_labels(path: &Path) -> Result<Vec<WordLabel>> {
    let text = read_to_string(path)?;
    let has_header = text.lines().find(|l| !l.starts_with('#') && !l.trim().is_empty()).is_some_and(|l| l.starts_with("word,"));
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut latest: BTreeMap<String, (usize, WordLabel)> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if i == 0 && has_header {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: LabelRow = rec.deserialize(None).map_err(|e| csv_error(path, e))?;
        let label: WordClass = row.label.trim().parse().map_err(|e: spurcheck_core::Error| Error::parse(path, line, e.to_string()))?;
        let note = row.note.filter(|n| !n.is_empty());
        latest.insert(row.word.clone(), (i, WordLabel { word: row.word, label, note }));
    }
    let mut labels: Vec<(usize, WordLabel)> = latest.into_values().collect();
    labels.sort_by_key(|(i, _)| *i);
    Ok(labels.into_iter().map(|(_, l)| l).collect())
}

/// Appends one label, creating the file with a header if needed.
pub fn append_label(path: &Path, label: &WordLabel) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    if fresh {
        w.write_record(["word", "label", "note"]).expect("in-memory write");
    }
    w.write_record([label.word.as_str(), label.label.as_str(), label.note.as_deref().unwrap_or("")]).expect("in-memory write");
    f.write_all(&w.into_inner().expect("in-memory writer")).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

pub fn labels_to_string(labels: &[WordLabel]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["word", "label", "note"]).expect("in-memory write");
    for l in labels {
        w.write_record([l.word.as_str(), l.label.as_str(), l.note.as_deref().unwrap_or("")]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub word: String,
    pub p_spurious: f64,
    pub rank: usize,
    /// `held_out` (cross-validated), `model` (full in-domain model) or
    /// `transfer` (model from another domain).
    pub source: String,
}

impl Table for PredictionRow {
    const COLUMNS: &'static [&'static str] = &["word", "p_spurious", "rank", "source"];
}

pub fn read_predictions(path: &Path) -> Result<(Provenance, Vec<(String, f64)>)> {
    let (prov, rows) = read_derived::<PredictionRow>(path)?;
    Ok((prov, rows.into_iter().map(|r| (r.word, r.p_spurious)).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub strategy: String,
    pub k_removed: usize,
    pub metric: String,
    pub majority: f64,
    pub minority: f64,
    pub all: f64,
}

impl Table for CurveRow {
    const COLUMNS: &'static [&'static str] = &["strategy", "k_removed", "metric", "majority", "minority", "all"];
}

pub fn curve_rows(strategy: Strategy, points: &[CurvePoint]) -> Vec<CurveRow> {
    points
        .iter()
        .map(|p| CurveRow {
            strategy: strategy.as_str().into(),
            k_removed: p.k_removed,
            metric: p.metric.as_str().into(),
            majority: p.majority,
            minority: p.minority,
            all: p.all,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub name: String,
    pub metric: String,
    pub all: f64,
}

impl Table for ReferenceRow {
    const COLUMNS: &'static [&'static str] = &["name", "metric", "all"];
}

pub fn reference_row(line: &ReferenceLine) -> ReferenceRow {
    ReferenceRow { name: line.name.clone(), metric: line.point.metric.as_str().into(), all: line.point.all }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// `cross_validation` or `transfer`.
    pub name: String,
    pub auc: f64,
    pub n_words: usize,
    pub n_spurious: usize,
    pub n_genuine: usize,
}

impl Table for EvalRow {
    const COLUMNS: &'static [&'static str] = &["name", "auc", "n_words", "n_spurious", "n_genuine"];
}
