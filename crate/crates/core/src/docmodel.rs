//! Bag-of-words logistic regression over sentences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::corpus::{Corpus, Label, LabeledSentence, Split};
use crate::linalg::{sparse_dot, SparseVec};
use crate::logistic::{self, sigmoid, Dataset, TrainOptions};
use crate::metrics;
use crate::{Error, Result};

/// Dense word index, sorted alphabetically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn from_words<I, S>(words: I) -> Vocabulary
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let words: Vec<String> = set.into_iter().collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary { words, index }
    }

    /// Every token of the given sentences.
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a LabeledSentence>) -> Vocabulary {
        Vocabulary::from_words(sentences.into_iter().flat_map(|s| s.tokens.iter().cloned()))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Copy without the given words.
    pub fn without<'a>(&self, removed: impl IntoIterator<Item = &'a str>) -> Vocabulary {
        let removed: BTreeSet<&str> = removed.into_iter().collect();
        Vocabulary::from_words(self.words.iter().filter(|w| !removed.contains(w.as_str())).cloned())
    }

    /// Copy restricted to words in `allowed`.
    pub fn restricted_to(&self, allowed: &BTreeSet<String>) -> Vocabulary {
        Vocabulary::from_words(self.words.iter().filter(|w| allowed.contains(*w)).cloned())
    }
}

/// Word-count vector; out-of-vocabulary tokens are ignored.
pub fn featurize_doc(tokens: &[String], vocab: &Vocabulary) -> SparseVec {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.get(t) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    counts.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocModel {
    pub vocab: Vocabulary,
    pub theta: Vec<f64>,
    pub bias: f64,
    pub options: TrainOptions,
}

impl DocModel {
    pub fn predict_proba(&self, x: &[(usize, f64)]) -> f64 {
        sigmoid(sparse_dot(x, &self.theta) + self.bias)
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> f64 {
        self.predict_proba(&featurize_doc(tokens, &self.vocab))
    }

    pub fn coefficient(&self, word: &str) -> Option<f64> {
        self.vocab.get(word).map(|i| self.theta[i])
    }

    /// The same model with every parameter negated.
    pub fn negated(&self) -> DocModel {
        DocModel {
            theta: self.theta.iter().map(|t| -t).collect(),
            bias: -self.bias,
            ..self.clone()
        }
    }
}

/// Fits on the corpus' train split with a vocabulary of all train tokens.
pub fn train_doc(corpus: &Corpus, opts: &TrainOptions) -> Result<DocModel> {
    let train: Vec<&LabeledSentence> = corpus.split_sentences(Split::Train).collect();
    let vocab = Vocabulary::from_sentences(train.iter().copied());
    train_with_vocab(&train, vocab, opts)
}

/// Fits on the given sentences using a fixed vocabulary. Sentences are
/// processed in id order so the result does not depend on input order.
pub fn train_with_vocab(sentences: &[&LabeledSentence], vocab: Vocabulary, opts: &TrainOptions) -> Result<DocModel> {
    let mut ordered: Vec<&LabeledSentence> = sentences.to_vec();
    ordered.sort_by_key(|s| s.id);
    let data = Dataset {
        dim: vocab.len(),
        rows: ordered.iter().map(|s| featurize_doc(&s.tokens, &vocab)).collect(),
        labels: ordered.iter().map(|s| s.label).collect(),
    };
    let fit = logistic::fit(&data, opts)?;
    Ok(DocModel { vocab, theta: fit.weights, bias: fit.bias, options: *opts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopWord {
    pub word: String,
    pub coef: f64,
    /// `sign(coef)`; a zero coefficient counts as positive.
    pub class: Label,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopWordSet {
    pub entries: Vec<TopWord>,
}

impl TopWordSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|e| e.word.as_str())
    }

    pub fn get(&self, word: &str) -> Option<&TopWord> {
        self.entries.iter().find(|e| e.word == word)
    }

    pub fn word_set(&self) -> BTreeSet<&str> {
        self.words().collect()
    }
}

/// Words with `|θ| >= threshold`, by decreasing magnitude then alphabetically.
pub fn top_words(model: &DocModel, threshold: f64) -> TopWordSet {
    let mut entries: Vec<TopWord> = model
        .vocab
        .words()
        .iter()
        .zip(&model.theta)
        .filter(|(_, &c)| libm::fabs(c) >= threshold)
        .map(|(w, &c)| TopWord {
            word: w.clone(),
            coef: c,
            class: if c < 0.0 { Label::Negative } else { Label::Positive },
        })
        .collect();
    entries.sort_by(|a, b| {
        libm::fabs(b.coef)
            .total_cmp(&libm::fabs(a.coef))
            .then_with(|| a.word.cmp(&b.word))
    });
    TopWordSet { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Auc,
    Accuracy,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Accuracy => "accuracy",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Metric> {
        match s {
            "auc" => Ok(Metric::Auc),
            "accuracy" => Ok(Metric::Accuracy),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

pub fn evaluate<'a>(
    model: &DocModel,
    sentences: impl IntoIterator<Item = &'a LabeledSentence>,
    metric: Metric,
) -> Result<f64> {
    let (scores, labels): (Vec<f64>, Vec<Label>) = sentences
        .into_iter()
        .map(|s| (model.predict_tokens(&s.tokens), s.label))
        .unzip();
    match metric {
        Metric::Auc => metrics::auc(&scores, &labels),
        Metric::Accuracy => Ok(metrics::accuracy(&scores, &labels)),
    }
}
