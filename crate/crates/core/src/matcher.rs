//! Best-match counterfactual search and per-word treatment effects.
//!
//! For an occurrence of word `w` in sentence `s`, the match is the candidate
//! context with the highest cosine similarity among sentences that do not
//! contain `w`. Ties go to the smallest `(sentence_id, context_id)`, which
//! makes the result independent of candidate enumeration order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::contexts::{cosine_with_sq_norms, ContextWindow, EmbeddingStore};
use crate::corpus::{Corpus, Label};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub word: String,
    pub treated_context_id: u64,
    pub treated_sentence_id: u64,
    pub treated_label: Label,
    pub matched_context_id: u64,
    pub matched_sentence_id: u64,
    pub matched_label: Label,
    /// The word at the matched position (`w'`).
    pub matched_word: String,
    pub similarity: f64,
}

impl MatchRecord {
    /// `y_s - y_{s*}`, one of -2, 0, 2.
    pub fn effect(&self) -> f64 {
        self.treated_label.value() - self.matched_label.value()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteEstimate {
    pub word: String,
    pub tau: f64,
    pub n_pairs: usize,
}

/// Mean label difference over one word's matches.
pub fn ate(records: &[MatchRecord]) -> Result<AteEstimate> {
    let first = records.first().ok_or_else(|| Error::NoMatches(String::new()))?;
    let sum: f64 = records.iter().map(MatchRecord::effect).sum();
    Ok(AteEstimate { word: first.word.clone(), tau: sum / records.len() as f64, n_pairs: records.len() })
}

/// Groups records by word, preserving their order within each word.
pub fn records_by_word(records: &[MatchRecord]) -> BTreeMap<&str, Vec<&MatchRecord>> {
    let mut out: BTreeMap<&str, Vec<&MatchRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.word.as_str()).or_default().push(r);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchOptions {
    /// Keep only the first occurrence of a word per sentence.
    pub dedup_per_sentence: bool,
}

/// Per-word counts of treated occurrences and of those left unmatched.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchDiagnostics {
    pub treated: BTreeMap<String, usize>,
    pub unmatched: BTreeMap<String, usize>,
}

impl MatchDiagnostics {
    pub fn total_unmatched(&self) -> usize {
        self.unmatched.values().sum()
    }
}

struct Candidate<'a> {
    window: &'a ContextWindow,
    label: Label,
    vector: &'a [f32],
    sq_norm: f64,
}

/// Exact search over a fixed candidate pool. Immutable once built.
pub struct Matcher<'a> {
    candidates: Vec<Candidate<'a>>,
    labels: BTreeMap<u64, Label>,
    words: BTreeMap<u64, BTreeSet<&'a str>>,
    store: &'a EmbeddingStore,
}

impl<'a> Matcher<'a> {
    pub fn new(corpus: &'a Corpus, candidates: &'a [ContextWindow], store: &'a EmbeddingStore) -> Result<Self> {
        let labels: BTreeMap<u64, Label> = corpus.sentences.iter().map(|s| (s.id, s.label)).collect();
        let words = crate::contexts::sentence_words(corpus);
        let mut cands = Vec::with_capacity(candidates.len());
        for w in candidates {
            let label = *labels
                .get(&w.sentence_id)
                .ok_or_else(|| Error::MissingInput(alloc::format!("sentence {} for context {}", w.sentence_id, w.context_id)))?;
            cands.push(Candidate {
                window: w,
                label,
                vector: store.require(w.context_id)?,
                sq_norm: store.sq_norm(w.context_id).unwrap_or(0.0),
            });
        }
        Ok(Matcher { candidates: cands, labels, words, store })
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// `mask[i]` is true when candidate `i` comes from a sentence without `word`.
    pub fn eligibility(&self, word: &str) -> Vec<bool> {
        self.candidates
            .iter()
            .map(|c| !self.words.get(&c.window.sentence_id).is_some_and(|ws| ws.contains(word)))
            .collect()
    }

    /// Best match for one treated occurrence, or `None` when no candidate
    /// is eligible.
    pub fn best_match(&self, treated: &ContextWindow) -> Result<Option<MatchRecord>> {
        let mask = self.eligibility(&treated.word);
        self.best_match_masked(treated, &mask)
    }

    /// [`best_match`](Self::best_match) with a precomputed eligibility mask
    /// for `treated.word`.
    pub fn best_match_masked(&self, treated: &ContextWindow, mask: &[bool]) -> Result<Option<MatchRecord>> {
        let u = self.store.require(treated.context_id)?;
        let uu = self.store.sq_norm(treated.context_id).unwrap_or(0.0);
        let treated_label = *self
            .labels
            .get(&treated.sentence_id)
            .ok_or_else(|| Error::MissingInput(alloc::format!("sentence {}", treated.sentence_id)))?;
        let mut best: Option<(f64, u64, u64, usize)> = None;
        for (i, c) in self.candidates.iter().enumerate() {
            if !mask[i] {
                continue;
            }
            let sim = cosine_with_sq_norms(u, c.vector, uu, c.sq_norm);
            let key = (c.window.sentence_id, c.window.context_id);
            let better = match best {
                None => true,
                Some((bs, bsid, bcid, _)) => sim > bs || (sim == bs && key < (bsid, bcid)),
            };
            if better {
                best = Some((sim, key.0, key.1, i));
            }
        }
        Ok(best.map(|(sim, _, _, i)| {
            let c = &self.candidates[i];
            MatchRecord {
                word: treated.word.clone(),
                treated_context_id: treated.context_id,
                treated_sentence_id: treated.sentence_id,
                treated_label,
                matched_context_id: c.window.context_id,
                matched_sentence_id: c.window.sentence_id,
                matched_label: c.label,
                matched_word: c.window.word.clone(),
                similarity: sim,
            }
        }))
    }

    /// Treated windows that take part in matching under `opts`, in input
    /// order.
    pub fn treated_occurrences<'w>(treated: &'w [ContextWindow], opts: &MatchOptions) -> Vec<&'w ContextWindow> {
        let mut seen: BTreeSet<(&str, u64)> = BTreeSet::new();
        treated
            .iter()
            .filter(|w| !opts.dedup_per_sentence || seen.insert((w.word.as_str(), w.sentence_id)))
            .collect()
    }

    /// Matches every treated window, in input order. Unmatchable
    /// occurrences are skipped and counted in the diagnostics.
    pub fn match_all(&self, treated: &[ContextWindow], opts: &MatchOptions) -> Result<(Vec<MatchRecord>, MatchDiagnostics)> {
        let occurrences = Self::treated_occurrences(treated, opts);
        let mut masks: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
        let mut results = Vec::with_capacity(occurrences.len());
        for w in &occurrences {
            let mask = masks.entry(w.word.as_str()).or_insert_with(|| self.eligibility(&w.word));
            results.push(self.best_match_masked(w, mask)?);
        }
        Ok(collect_results(&occurrences, results))
    }
}

/// Pairs per-occurrence outcomes with their windows into records and
/// diagnostics. Shared by sequential and parallel drivers.
pub fn collect_results(
    occurrences: &[&ContextWindow],
    results: Vec<Option<MatchRecord>>,
) -> (Vec<MatchRecord>, MatchDiagnostics) {
    let mut diag = MatchDiagnostics::default();
    let mut records = Vec::new();
    for (w, r) in occurrences.iter().zip(results) {
        *diag.treated.entry(w.word.clone()).or_insert(0) += 1;
        match r {
            Some(rec) => records.push(rec),
            None => *diag.unmatched.entry(w.word.clone()).or_insert(0) += 1,
        }
    }
    (records, diag)
}

/// One-shot best match over `candidates` for `treated` as an occurrence of
/// `word`.
pub fn best_match(
    corpus: &Corpus,
    treated: &ContextWindow,
    candidates: &[ContextWindow],
    store: &EmbeddingStore,
    word: &str,
) -> Result<Option<MatchRecord>> {
    let matcher = Matcher::new(corpus, candidates, store)?;
    let mut t = treated.clone();
    t.word = String::from(word);
    matcher.best_match(&t)
}

/// Matches all windows against the same pool.
pub fn match_all(
    corpus: &Corpus,
    windows: &[ContextWindow],
    store: &EmbeddingStore,
    opts: &MatchOptions,
) -> Result<(Vec<MatchRecord>, MatchDiagnostics)> {
    Matcher::new(corpus, windows, store)?.match_all(windows, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::Provenance;
    use crate::corpus::{LabeledSentence, Split};
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(t: Label, m: Label) -> MatchRecord {
        MatchRecord {
            word: "w".into(),
            treated_context_id: 0,
            treated_sentence_id: 0,
            treated_label: t,
            matched_context_id: 1,
            matched_sentence_id: 1,
            matched_label: m,
            matched_word: "v".into(),
            similarity: 0.5,
        }
    }

    #[test]
    fn ate_examples() {
        use Label::{Negative as N, Positive as P};
        assert_eq!(ate(&[rec(P, N), rec(P, N), rec(P, N)]).unwrap().tau, 2.0);
        assert_eq!(ate(&[rec(P, P), rec(N, N)]).unwrap().tau, 0.0);
        let e = ate(&[rec(P, N), rec(P, P)]).unwrap();
        assert_eq!((e.tau, e.n_pairs), (1.0, 2));
        assert!(matches!(ate(&[]), Err(Error::NoMatches(_))));
    }

    fn sentence(id: u64, text: &str, label: Label) -> LabeledSentence {
        LabeledSentence {
            id,
            tokens: text.split_whitespace().map(ToString::to_string).collect(),
            label,
            split: Split::Train,
        }
    }

    fn win(id: u64, sid: u64, word: &str) -> ContextWindow {
        ContextWindow { context_id: id, sentence_id: sid, word: word.into(), position: 0, left: vec![], right: vec![] }
    }

    #[test]
    fn exclusion_ties_and_unmatched() {
        let corpus = Corpus::new(
            "t",
            vec![
                sentence(0, "w a", Label::Positive),
                sentence(1, "v b", Label::Negative),
                sentence(2, "u c", Label::Negative),
                sentence(3, "w u", Label::Positive),
            ],
        );
        let windows = vec![win(0, 0, "w"), win(1, 1, "v"), win(2, 2, "u"), win(3, 3, "u")];
        let mut store = EmbeddingStore::new(2, Provenance::Fallback);
        store.insert(0, &[1.0, 0.0]).unwrap();
        store.insert(1, &[2.0, 1.0]).unwrap();
        store.insert(2, &[2.0, 1.0]).unwrap();
        store.insert(3, &[1.0, 0.0]).unwrap();
        let m = Matcher::new(&corpus, &windows, &store).unwrap();
        // sentence 3 contains `w`, so the identical vector there is excluded;
        // candidates 1 and 2 tie and the smaller sentence id wins.
        let r = m.best_match(&windows[0]).unwrap().unwrap();
        assert_eq!((r.matched_context_id, r.matched_word.as_str()), (1, "v"));
        assert_eq!(r.matched_label, Label::Negative);
        // `u` occurs in sentences 2 and 3; candidates 0 and 1 remain
        let r = m.best_match(&windows[3]).unwrap().unwrap();
        assert_eq!(r.matched_context_id, 0);
        assert!((r.similarity - 1.0).abs() < 1e-15);

        let only_w = vec![win(0, 0, "w"), win(3, 3, "w")];
        let (recs, diag) = match_all(&corpus, &only_w, &store, &MatchOptions::default()).unwrap();
        assert!(recs.is_empty());
        assert_eq!(diag.unmatched.get("w"), Some(&2));
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let ws = vec![win(0, 0, "w"), win(1, 0, "w"), win(2, 1, "w")];
        let kept = Matcher::treated_occurrences(&ws, &MatchOptions { dedup_per_sentence: true });
        assert_eq!(kept.iter().map(|w| w.context_id).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(Matcher::treated_occurrences(&ws, &MatchOptions::default()).len(), 3);
    }
}
