//! Plain-text summary of one output directory.

use std::fmt::Write as _;
use std::path::PathBuf;

use spurcheck_core::corpus::{ClassCounts, Split};
use spurcheck_core::robustness::Strategy;

use crate::artifact::{read_provenance, write_atomic};
use crate::error::{Error, Result};
use crate::formats::tables::{self, CurveRow, EvalRow, ReferenceRow, SummaryRow};
use crate::stages::{self, GroupRow, Workspace};

/// How many top words the report lists.
pub const TOP_ROWS: usize = 20;

/// Derived files the report may read, in a fixed order.
fn candidates() -> Vec<String> {
    let mut names: Vec<String> = [
        stages::CORPUS,
        stages::TOP_WORDS,
        stages::MATCH_SUMMARY,
        stages::WORD_EVAL,
        stages::TRANSFER_EVAL,
        stages::GROUPS,
        stages::REFERENCES,
    ]
    .map(String::from)
    .to_vec();
    names.extend(Strategy::ALL.map(stages::curve_file));
    names
}

/// Every present artifact must carry the current config hash.
fn check_consistent(ws: &Workspace) -> Result<Vec<String>> {
    let mut present = Vec::new();
    for name in candidates() {
        let p = ws.path(&name);
        if !p.exists() {
            continue;
        }
        let prov = read_provenance(&p)?;
        if prov.config_hash != ws.prov.config_hash {
            return Err(Error::ConfigMismatch { path: p, found: prov.config_hash, expected: ws.prov.config_hash.clone() });
        }
        present.push(name);
    }
    Ok(present)
}

fn rule(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n{title}\n{}", "-".repeat(title.chars().count()));
}

pub fn render(ws: &Workspace) -> Result<String> {
    let present = check_consistent(ws)?;
    let has = |n: &str| present.iter().any(|p| p == n);
    let cfg = &ws.config;
    let mut out = String::new();
    let _ = writeln!(out, "spurcheck report: {} ({})", cfg.dataset.name, cfg.dataset.kind);
    let _ = writeln!(out, "config {}  seed {}", ws.prov.config_hash, ws.prov.seed);

    let corpus = ws.corpus()?;
    let train = ClassCounts::of(corpus.split_sentences(Split::Train));
    let test = ClassCounts::of(corpus.split_sentences(Split::Test));
    rule(&mut out, "Corpus");
    let _ = writeln!(out, "{:<8}{:>10}{:>10}", "split", "positive", "negative");
    let _ = writeln!(out, "{:<8}{:>10}{:>10}", "train", train.positive, train.negative);
    let _ = writeln!(out, "{:<8}{:>10}{:>10}", "test", test.positive, test.negative);

    let top = ws.top_words()?;
    rule(&mut out, "Top words");
    let pos = top.entries.iter().filter(|t| t.coef >= 0.0).count();
    let _ = writeln!(out, "{} words with |theta| >= {} ({} positive, {} negative)", top.len(), cfg.doc.threshold, pos, top.len() - pos);

    if has(stages::MATCH_SUMMARY) {
        let rows: Vec<SummaryRow> = tables::read_table(&ws.path(stages::MATCH_SUMMARY))?;
        let occ: usize = rows.iter().map(|r| r.occurrences).sum();
        let matched: usize = rows.iter().map(|r| r.matched).sum();
        let _ = writeln!(out, "{occ} occurrences, {matched} matched, {} unmatched", occ - matched);
        let _ = writeln!(out, "\n{:<24}{:>10}{:>10}{:>10}", "word", "theta", "matched", "ate");
        for (t, r) in top.entries.iter().zip(&rows).take(TOP_ROWS) {
            let ate = r.ate.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(out, "{:<24}{:>10.4}{:>10}{:>10}", t.word, t.coef, r.matched, ate);
        }
        if rows.len() > TOP_ROWS {
            let _ = writeln!(out, "... {} more", rows.len() - TOP_ROWS);
        }
    }

    let mut evals: Vec<EvalRow> = Vec::new();
    for name in [stages::WORD_EVAL, stages::TRANSFER_EVAL] {
        if has(name) {
            evals.extend(tables::read_table::<EvalRow>(&ws.path(name))?);
        }
    }
    if !evals.is_empty() {
        rule(&mut out, "Word classifier");
        let _ = writeln!(out, "{:<20}{:>8}{:>8}{:>10}{:>10}", "evaluation", "auc", "words", "spurious", "genuine");
        for e in &evals {
            let _ = writeln!(out, "{:<20}{:>8.4}{:>8}{:>10}{:>10}", e.name, e.auc, e.n_words, e.n_spurious, e.n_genuine);
        }
    }

    if has(stages::GROUPS) {
        let rows: Vec<GroupRow> = tables::read_table(&ws.path(stages::GROUPS))?;
        let maj: usize = rows.iter().map(|r| r.majority).sum();
        let min: usize = rows.iter().map(|r| r.minority).sum();
        rule(&mut out, "Evaluation groups");
        let _ = writeln!(out, "{} tracked words, quota {}: {maj} majority and {min} minority sentences", rows.len(), cfg.robustness.quota);
    }

    let curves: Vec<Strategy> = Strategy::ALL.into_iter().filter(|s| has(&stages::curve_file(*s))).collect();
    if !curves.is_empty() {
        rule(&mut out, "Removal curves");
        for s in curves {
            let rows: Vec<CurveRow> = tables::read_table(&ws.path(&stages::curve_file(s)))?;
            let metric = rows.first().map_or("", |r| r.metric.as_str());
            let _ = writeln!(out, "\n{} ({metric})", s.as_str());
            let _ = writeln!(out, "{:>10}{:>10}{:>10}{:>10}", "removed", "majority", "minority", "all");
            for r in &rows {
                let _ = writeln!(out, "{:>10}{:>10.4}{:>10.4}{:>10.4}", r.k_removed, r.majority, r.minority, r.all);
            }
        }
    }

    if has(stages::REFERENCES) {
        let rows: Vec<ReferenceRow> = tables::read_table(&ws.path(stages::REFERENCES))?;
        rule(&mut out, "Reference lines");
        let _ = writeln!(out, "{:<12}{:>10}{:>10}", "name", "metric", "all");
        for r in &rows {
            let _ = writeln!(out, "{:<12}{:>10}{:>10.4}", r.name, r.metric, r.all);
        }
    }
    Ok(out)
}

/// Writes `report.txt` and returns its path.
pub fn report(ws: &Workspace) -> Result<PathBuf> {
    let text = ws.prov.comment_line("report") + &render(ws)?;
    let p = ws.path(stages::REPORT);
    write_atomic(&p, text.as_bytes())?;
    Ok(p)
}
