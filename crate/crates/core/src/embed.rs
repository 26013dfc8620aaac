//! Built-in context embedder used when no external embedding file is given.
//!
//! Word vectors come from a truncated eigen-factorization of the positive
//! PMI matrix of symmetric-window co-occurrence counts over the train split.
//! A context is the mean of its tokens' word vectors. The factorization is
//! randomized subspace iteration followed by a Rayleigh-Ritz step, so the
//! whole path is deterministic under the seed.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::contexts::{ContextWindow, EmbeddingStore, Provenance};
use crate::corpus::{Corpus, Split};
use crate::docmodel::Vocabulary;
use crate::linalg::{symmetric_eigen, Csr, Dense};
use crate::rng::{self, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallbackOptions {
    pub dim: usize,
    /// Co-occurrence half-width.
    pub window: usize,
    pub seed: u64,
    pub power_iters: usize,
    pub oversample: usize,
}

impl Default for FallbackOptions {
    fn default() -> Self {
        FallbackOptions { dim: 100, window: 5, seed: 0, power_iters: 8, oversample: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    pub vocab: Vocabulary,
    pub dim: usize,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vocab.get(word).map(|i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

/// Positive PMI matrix over the vocabulary of the train split.
pub fn ppmi_matrix(corpus: &Corpus, vocab: &Vocabulary, window: usize) -> Csr {
    let v = vocab.len();
    let mut pairs: Vec<u64> = Vec::new();
    for s in corpus.split_sentences(Split::Train) {
        let ids: Vec<usize> = s.tokens.iter().filter_map(|t| vocab.get(t)).collect();
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len().min(i + 1 + window) {
                let (a, b) = (ids[i] as u64, ids[j] as u64);
                pairs.push((a << 32) | b);
                pairs.push((b << 32) | a);
            }
        }
    }
    pairs.sort_unstable();
    let mut counts: Vec<(usize, usize, f64)> = Vec::new();
    for key in pairs {
        let (a, b) = ((key >> 32) as usize, (key & 0xffff_ffff) as usize);
        match counts.last_mut() {
            Some(last) if last.0 == a && last.1 == b => last.2 += 1.0,
            _ => counts.push((a, b, 1.0)),
        }
    }
    let mut row_sum = vec![0.0; v];
    let mut total = 0.0;
    for &(a, _, c) in &counts {
        row_sum[a] += c;
        total += c;
    }
    let triplets: Vec<(usize, usize, f64)> = counts
        .into_iter()
        .filter_map(|(a, b, c)| {
            let pmi = libm::log(c * total / (row_sum[a] * row_sum[b]));
            (pmi > 0.0).then_some((a, b, pmi))
        })
        .collect();
    Csr::from_sorted_triplets(v, v, &triplets)
}

pub fn train_word_vectors(corpus: &Corpus, opts: &FallbackOptions) -> Result<WordVectors> {
    if opts.dim < 1 {
        return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
    }
    let vocab = Vocabulary::from_sentences(corpus.split_sentences(Split::Train));
    if vocab.is_empty() {
        return Err(Error::DegenerateCorpus("no training tokens for the fallback embedder".into()));
    }
    let m = ppmi_matrix(corpus, &vocab, opts.window);
    let v = vocab.len();
    let k = opts.dim.min(v);
    let p = (k + opts.oversample).min(v);

    let mut rng = rng::seeded(opts.seed, stream::FACTORIZE);
    let mut q = Dense::zeros(v, p);
    for x in q.data.iter_mut() {
        *x = rng.gen_range(-1.0..1.0);
    }
    q.orthonormalize_columns();
    for _ in 0..opts.power_iters {
        q = m.mul_dense(&q);
        q.orthonormalize_columns();
    }
    let mq = m.mul_dense(&q);
    let mut b = q.t_mul(&mq);
    for i in 0..p {
        for j in (i + 1)..p {
            let avg = 0.5 * (b.at(i, j) + b.at(j, i));
            b.set(i, j, avg);
            b.set(j, i, avg);
        }
    }
    let (vals, vecs) = symmetric_eigen(&b);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| libm::fabs(vals[y]).total_cmp(&libm::fabs(vals[x])).then(x.cmp(&y)));
    order.truncate(k);

    let mut data = vec![0.0; v * opts.dim];
    for (out_col, &c) in order.iter().enumerate() {
        let scale = libm::sqrt(libm::fabs(vals[c]));
        let ritz = vecs.column(c);
        let mut col: Vec<f64> = (0..v)
            .map(|r| q.row(r).iter().zip(&ritz).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        // sign convention: largest-magnitude entry positive
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| if libm::fabs(x) > best.1 { (i, libm::fabs(x)) } else { best })
            .0;
        if col[pivot] < 0.0 {
            for x in &mut col {
                *x = -*x;
            }
        }
        for r in 0..v {
            data[r * opts.dim + out_col] = col[r] * scale;
        }
    }
    Ok(WordVectors { vocab, dim: opts.dim, data })
}

/// Embeds windows as the mean of their in-vocabulary token vectors. A
/// window with no usable token gets a seeded pseudo-random unit vector.
pub fn embed_windows(vectors: &WordVectors, windows: &[ContextWindow], seed: u64) -> Result<EmbeddingStore> {
    let dim = vectors.dim;
    let mut store = EmbeddingStore::new(dim, Provenance::Fallback);
    let mut acc = vec![0.0f64; dim];
    for w in windows {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut n = 0usize;
        for t in w.tokens() {
            if let Some(v) = vectors.get(t) {
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
                n += 1;
            }
        }
        let mut out: Vec<f32> = acc.iter().map(|a| (a / n.max(1) as f64) as f32).collect();
        if n == 0 || out.iter().all(|&x| x == 0.0) {
            out = random_unit(dim, seed, w.context_id);
        }
        store.insert(w.context_id, &out)?;
    }
    Ok(store)
}

fn random_unit(dim: usize, seed: u64, context_id: u64) -> Vec<f32> {
    let mut rng = rng::seeded_item(seed, stream::OOV_CONTEXT, context_id);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if n > 1e-6 {
            return v.iter().map(|x| (x / n) as f32).collect();
        }
    }
}

/// Trains word vectors on the corpus and embeds the windows.
pub fn fallback_embed(corpus: &Corpus, windows: &[ContextWindow], opts: &FallbackOptions) -> Result<EmbeddingStore> {
    if corpus.sentences.is_empty() {
        return Err(Error::DegenerateCorpus("empty corpus".into()));
    }
    let vectors = train_word_vectors(corpus, opts)?;
    embed_windows(&vectors, windows, opts.seed)
}
