//! Context windows around top-word occurrences and their embeddings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Corpus;
use crate::docmodel::TopWordSet;
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 5;

/// One occurrence of a word with up to `window` tokens on either side. The
/// word itself is not part of `left` or `right`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow {
    pub context_id: u64,
    pub sentence_id: u64,
    pub word: String,
    pub position: usize,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

impl ContextWindow {
    pub fn tokens(&self) -> impl Iterator<Item = &String> + '_ {
        self.left.iter().chain(self.right.iter())
    }

    /// Window text with the word removed, as fed to an external encoder.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for t in self.tokens() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(t);
        }
        out
    }
}

fn window_at(tokens: &[String], position: usize, window: usize) -> (Vec<String>, Vec<String>) {
    let start = position.saturating_sub(window);
    let end = (position + 1 + window).min(tokens.len());
    (tokens[start..position].to_vec(), tokens[position + 1..end].to_vec())
}

/// One window per occurrence of every top word, ordered by
/// `(sentence_id, position)`; context ids are assigned `0..` in that order.
pub fn extract_contexts(corpus: &Corpus, top_words: &TopWordSet, window: usize) -> Vec<ContextWindow> {
    let words = top_words.word_set();
    extract_where(corpus, window, |t| words.contains(t))
}

/// Windows at every token position, for candidate pools wider than the top
/// words.
pub fn extract_all_positions(corpus: &Corpus, window: usize) -> Vec<ContextWindow> {
    extract_where(corpus, window, |_| true)
}

fn extract_where(corpus: &Corpus, window: usize, keep: impl Fn(&str) -> bool) -> Vec<ContextWindow> {
    let mut sentences: Vec<_> = corpus.sentences.iter().collect();
    sentences.sort_by_key(|s| s.id);
    let mut out = Vec::new();
    for s in sentences {
        for (pos, tok) in s.tokens.iter().enumerate() {
            if !keep(tok) {
                continue;
            }
            let (left, right) = window_at(&s.tokens, pos, window);
            out.push(ContextWindow {
                context_id: out.len() as u64,
                sentence_id: s.id,
                word: tok.clone(),
                position: pos,
                left,
                right,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ExternalFile,
    Fallback,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ExternalFile => "external_file",
            Provenance::Fallback => "fallback",
        }
    }
}

/// Context vectors of one fixed dimension, keyed by context id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    provenance: Provenance,
    rows: BTreeMap<u64, usize>,
    data: Vec<f32>,
    /// Squared Euclidean norms, one per row.
    sq_norms: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, provenance: Provenance) -> EmbeddingStore {
        EmbeddingStore { dim, provenance, rows: BTreeMap::new(), data: Vec::new(), sq_norms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, context_id: u64, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        if vector.iter().any(|v| !v.is_finite()) || vector.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidVector(context_id));
        }
        if self.rows.contains_key(&context_id) {
            return Err(Error::DuplicateContext(context_id));
        }
        self.rows.insert(context_id, self.sq_norms.len());
        self.data.extend_from_slice(vector);
        self.sq_norms.push(dot_f32(vector, vector));
        Ok(())
    }

    pub fn get(&self, context_id: u64) -> Option<&[f32]> {
        self.rows.get(&context_id).map(|&r| &self.data[r * self.dim..(r + 1) * self.dim])
    }

    pub fn norm(&self, context_id: u64) -> Option<f64> {
        self.sq_norm(context_id).map(libm::sqrt)
    }

    pub fn sq_norm(&self, context_id: u64) -> Option<f64> {
        self.rows.get(&context_id).map(|&r| self.sq_norms[r])
    }

    pub fn require(&self, context_id: u64) -> Result<&[f32]> {
        self.get(context_id).ok_or(Error::MissingEmbedding(context_id))
    }

    /// Ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.rows.keys().copied()
    }

    /// Vectors in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f32])> + '_ {
        self.rows
            .iter()
            .map(move |(&id, &r)| (id, &self.data[r * self.dim..(r + 1) * self.dim]))
    }

    /// Checks that every window has a vector.
    pub fn covers(&self, windows: &[ContextWindow]) -> Result<()> {
        for w in windows {
            self.require(w.context_id)?;
        }
        Ok(())
    }

    /// Cosine similarity between two stored vectors.
    pub fn similarity(&self, a: u64, b: u64) -> Result<f64> {
        let (ra, rb) = (
            *self.rows.get(&a).ok_or(Error::MissingEmbedding(a))?,
            *self.rows.get(&b).ok_or(Error::MissingEmbedding(b))?,
        );
        let u = &self.data[ra * self.dim..(ra + 1) * self.dim];
        let v = &self.data[rb * self.dim..(rb + 1) * self.dim];
        Ok(cosine_with_sq_norms(u, v, self.sq_norms[ra], self.sq_norms[rb]))
    }

    /// Copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<EmbeddingStore> {
        let mut out = EmbeddingStore::new(self.dim, self.provenance);
        for (id, v) in self.iter() {
            let scaled: Vec<f32> = v.iter().map(|x| x * factor).collect();
            out.insert(id, &scaled)?;
        }
        Ok(out)
    }
}

/// Euclidean norm accumulated in `f64` in index order.
pub fn l2_norm(v: &[f32]) -> f64 {
    libm::sqrt(dot_f32(v, v))
}

fn dot_f32(u: &[f32], v: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        acc += f64::from(a) * f64::from(b);
    }
    acc
}

/// `⟨u, v⟩ / (‖u‖ ‖v‖)` clamped to `[-1, 1]`; 0 when either vector is zero.
///
/// Evaluated as `⟨u, v⟩ / sqrt(‖u‖² ‖v‖²)` with all sums in `f64`, which
/// gives exactly 1 for `u = v`.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    Ok(cosine_with_sq_norms(u, v, dot_f32(u, u), dot_f32(v, v)))
}

pub(crate) fn cosine_with_sq_norms(u: &[f32], v: &[f32], uu: f64, vv: f64) -> f64 {
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    (dot_f32(u, v) / libm::sqrt(uu * vv)).clamp(-1.0, 1.0)
}

/// Distinct words per sentence id, for the `w ∉ s'` exclusion check.
pub fn sentence_words(corpus: &Corpus) -> BTreeMap<u64, BTreeSet<&str>> {
    corpus
        .sentences
        .iter()
        .map(|s| (s.id, s.tokens.iter().map(String::as_str).collect()))
        .collect()
}
