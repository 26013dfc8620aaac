#![allow(dead_code)]

use spurcheck_core::corpus::{ingest_str, split, Corpus, DatasetKind};
use spurcheck_core::synth::{generate, SynthConfig, SynthCorpus};

/// A small synthetic domain, ingested and split.
pub fn synth_domain(n_sentences: usize, seed: u64) -> (SynthCorpus, Corpus) {
    let cfg = SynthConfig { n_sentences, seed, ..Default::default() };
    let syn = generate(&cfg);
    let corpus = ingest_str("synth", &syn.to_tsv(), DatasetKind::Generic, seed).unwrap();
    let corpus = split(&corpus, 0.2, seed).unwrap();
    (syn, corpus)
}

/// Cosine recomputed from scratch in `f64`.
pub fn brute_cosine(u: &[f32], v: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut uu = 0.0f64;
    let mut vv = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        dot += f64::from(a) * f64::from(b);
    }
    for &a in u {
        uu += f64::from(a) * f64::from(a);
    }
    for &b in v {
        vv += f64::from(b) * f64::from(b);
    }
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    (dot / (uu * vv).sqrt()).clamp(-1.0, 1.0)
}
