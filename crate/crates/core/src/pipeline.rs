//! In-memory composition of the analysis stages for one domain: document
//! model, top words, contexts, fallback embeddings, matching and word
//! features. Runs single-threaded; the CLI drives the same steps with
//! on-disk artifacts in between.

use alloc::vec::Vec;

use crate::contexts::{extract_contexts, ContextWindow, EmbeddingStore, DEFAULT_WINDOW};
use crate::corpus::Corpus;
use crate::docmodel::{top_words, train_doc, DocModel, TopWordSet};
use crate::embed::{fallback_embed, FallbackOptions};
use crate::logistic::TrainOptions;
use crate::matcher::{match_all, records_by_word, MatchDiagnostics, MatchOptions, MatchRecord};
use crate::wordfeat::{featurize_word, WordFeatureVector};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub threshold: f64,
    pub window: usize,
    pub dim: usize,
    pub doc: TrainOptions,
    pub matching: MatchOptions,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            seed: 0,
            threshold: 1.0,
            window: DEFAULT_WINDOW,
            dim: 100,
            doc: DOC_TRAIN,
            matching: MatchOptions::default(),
        }
    }
}

/// Document-model defaults. The regularization is weak enough that
/// coefficient thresholds around 1.0 select a nonempty word set.
pub const DOC_TRAIN: TrainOptions = TrainOptions { l2_strength: 1e-3, max_iter: 1000, tol: 1e-6 };

#[derive(Debug, Clone)]
pub struct Analysis {
    pub model: DocModel,
    pub top: TopWordSet,
    pub windows: Vec<ContextWindow>,
    pub store: EmbeddingStore,
    pub records: Vec<MatchRecord>,
    pub diagnostics: MatchDiagnostics,
    /// One vector per top word with at least one match, in top-word order.
    pub features: Vec<WordFeatureVector>,
}

/// Runs every stage up to word features on an already split corpus.
pub fn analyze(corpus: &Corpus, cfg: &AnalysisConfig) -> Result<Analysis> {
    let model = train_doc(corpus, &cfg.doc)?;
    let top = top_words(&model, cfg.threshold);
    let windows = extract_contexts(corpus, &top, cfg.window);
    let opts = FallbackOptions { dim: cfg.dim, seed: cfg.seed, ..Default::default() };
    let store = fallback_embed(corpus, &windows, &opts)?;
    let (records, diagnostics) = match_all(corpus, &windows, &store, &cfg.matching)?;
    let features = word_features(&top, &records, &store)?;
    Ok(Analysis { model, top, windows, store, records, diagnostics, features })
}

/// Features for every top word that has matches, in top-word order.
pub fn word_features(top: &TopWordSet, records: &[MatchRecord], store: &EmbeddingStore) -> Result<Vec<WordFeatureVector>> {
    let by_word = records_by_word(records);
    top.entries
        .iter()
        .filter_map(|e| by_word.get(e.word.as_str()).map(|r| featurize_word(&e.word, r, store, e.coef)))
        .collect()
}
