//! Word classifier: logistic regression over standardized word features,
//! with `spurious` as the positive class.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::corpus::Label;
use crate::logistic::{self, sigmoid, Dataset, TrainOptions};
use crate::metrics;
use crate::rng::{self, stream};
use crate::wordfeat::{Scaler, WordFeatureVector, N_FEATURES};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WordClass {
    Spurious,
    Genuine,
}

impl WordClass {
    pub fn as_str(self) -> &'static str {
        match self {
            WordClass::Spurious => "spurious",
            WordClass::Genuine => "genuine",
        }
    }

    fn as_label(self) -> Label {
        match self {
            WordClass::Spurious => Label::Positive,
            WordClass::Genuine => Label::Negative,
        }
    }
}

impl FromStr for WordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<WordClass> {
        match s {
            "spurious" => Ok(WordClass::Spurious),
            "genuine" => Ok(WordClass::Genuine),
            other => Err(Error::InvalidArgument(format!("unknown word label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordLabel {
    pub word: String,
    pub label: WordClass,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordClassifierModel {
    pub weights: [f64; N_FEATURES],
    pub bias: f64,
    pub scaler: Scaler,
    pub l2_strength: f64,
}

impl WordClassifierModel {
    /// P(spurious) for an already standardized row.
    pub fn score_standardized(&self, row: &[f64; N_FEATURES]) -> f64 {
        let z: f64 = self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    /// P(spurious) for a raw feature row, standardized with the model's scaler.
    pub fn score(&self, raw: &[f64; N_FEATURES]) -> f64 {
        self.score_standardized(&self.scaler.transform(raw))
    }
}

pub const DEFAULT_TRAIN: TrainOptions = TrainOptions { l2_strength: 1.0, max_iter: 1000, tol: 1e-10 };

/// Trains on rows that were standardized with `scaler`.
pub fn train_word_clf(
    standardized: &[[f64; N_FEATURES]],
    labels: &[WordClass],
    scaler: Scaler,
    opts: &TrainOptions,
) -> Result<WordClassifierModel> {
    let rows: Vec<Vec<f64>> = standardized.iter().map(|r| r.to_vec()).collect();
    let ys: Vec<Label> = labels.iter().map(|c| c.as_label()).collect();
    let mut data = Dataset::from_dense(&rows, &ys);
    data.dim = N_FEATURES;
    let fit = logistic::fit(&data, opts)?;
    let mut weights = [0.0; N_FEATURES];
    weights.copy_from_slice(&fit.weights);
    Ok(WordClassifierModel { weights, bias: fit.bias, scaler, l2_strength: opts.l2_strength })
}

/// Fits the scaler on `raw` and trains on the standardized rows.
pub fn fit(raw: &[[f64; N_FEATURES]], labels: &[WordClass], opts: &TrainOptions) -> Result<WordClassifierModel> {
    let scaler = Scaler::fit(raw)?;
    train_word_clf(&scaler.transform_all(raw), labels, scaler, opts)
}

/// Feature rows joined with labels by word, in feature order. Unlabeled
/// words are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRows {
    pub words: Vec<String>,
    pub rows: Vec<[f64; N_FEATURES]>,
    pub labels: Vec<WordClass>,
}

pub fn join_labels(features: &[WordFeatureVector], labels: &[WordLabel]) -> LabeledRows {
    let by_word: BTreeMap<&str, WordClass> = labels.iter().map(|l| (l.word.as_str(), l.label)).collect();
    let mut out = LabeledRows { words: Vec::new(), rows: Vec::new(), labels: Vec::new() };
    for f in features {
        if let Some(&c) = by_word.get(f.word.as_str()) {
            out.words.push(f.word.clone());
            out.rows.push(f.values);
            out.labels.push(c);
        }
    }
    out
}

/// AUC of P(spurious) against labels.
pub fn auc(probs: &[f64], labels: &[WordClass]) -> Result<f64> {
    let ys: Vec<Label> = labels.iter().map(|c| c.as_label()).collect();
    metrics::auc(probs, &ys)
}

/// Stratified fold index per row: each class is shuffled under the seed and
/// dealt round-robin into `k` folds.
pub fn stratified_folds(labels: &[WordClass], k: usize, seed: u64) -> Vec<usize> {
    let mut folds = vec![0; labels.len()];
    for (ci, class) in [WordClass::Spurious, WordClass::Genuine].into_iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng::shuffle(&mut members, seed, stream::FOLDS + ((ci as u64) << 32));
        for (j, &i) in members.iter().enumerate() {
            folds[i] = j % k;
        }
    }
    folds
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// AUC over the pooled held-out predictions.
    pub auc: f64,
    pub held_out: Vec<f64>,
    pub folds: Vec<usize>,
}

/// k-fold cross-validation on raw feature rows. The scaler is refit on the
/// training rows of every fold.
pub fn cross_validate(
    raw: &[[f64; N_FEATURES]],
    labels: &[WordClass],
    k: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<CvResult> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    let folds = stratified_folds(labels, k, seed);
    let held_out = fold_predictions(labels, &folds, k, |train, test| {
        let train_raw: Vec<[f64; N_FEATURES]> = train.iter().map(|&i| raw[i]).collect();
        let train_y: Vec<WordClass> = train.iter().map(|&i| labels[i]).collect();
        let model = fit(&train_raw, &train_y, opts)?;
        Ok(test.iter().map(|&i| model.score(&raw[i])).collect())
    })?;
    let auc = auc(&held_out, labels)?;
    Ok(CvResult { auc, held_out, folds })
}

/// Runs `train_and_score(train_rows, test_rows)` for every fold and
/// scatters the scores back to row order. Fails if a training fold misses
/// a class.
pub fn fold_predictions(
    labels: &[WordClass],
    folds: &[usize],
    k: usize,
    mut train_and_score: impl FnMut(&[usize], &[usize]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let n = labels.len();
    let mut held_out = vec![f64::NAN; n];
    for fold in 0..k {
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == fold).collect();
        if test.is_empty() {
            continue;
        }
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != fold).collect();
        let has = |c| train.iter().any(|&i| labels[i] == c);
        if !has(WordClass::Spurious) || !has(WordClass::Genuine) {
            return Err(Error::FoldMissingClass { fold });
        }
        let scores = train_and_score(&train, &test)?;
        for (&i, s) in test.iter().zip(scores) {
            held_out[i] = s;
        }
    }
    Ok(held_out)
}

/// Scores another domain's raw features with a model trained elsewhere.
pub fn transfer(model: &WordClassifierModel, raw: &[[f64; N_FEATURES]]) -> Vec<f64> {
    raw.iter().map(|r| model.score(r)).collect()
}

/// Words by descending P(spurious), ties alphabetical.
pub fn rank_spurious(words: &[String], probs: &[f64]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = words.iter().cloned().zip(probs.iter().copied()).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
