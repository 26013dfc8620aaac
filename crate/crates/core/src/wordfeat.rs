//! Match-derived features for the word classifier.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::contexts::EmbeddingStore;
use crate::corpus::Label;
use crate::matcher::MatchRecord;
use crate::{Error, Result};

pub const N_FEATURES: usize = 15;

/// Column names in feature order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "ate",
    "weighted_ate",
    "top5_ate",
    "mean_sim",
    "top5_mean_sim",
    "max_sim",
    "std_sim",
    "sim_closest_pos",
    "sim_closest_neg",
    "doc_coef",
    "diff_norm",
    "top_diff_1",
    "top_diff_2",
    "top_diff_3",
    "max_abs_diff",
];

const TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct WordFeatureVector {
    pub word: String,
    pub values: [f64; N_FEATURES],
    pub n_matches: usize,
    /// No match had a positive label; `sim_closest_pos` was set to 0.
    pub missing_pos: bool,
    /// No match had a negative label; `sim_closest_neg` was set to 0.
    pub missing_neg: bool,
}

impl WordFeatureVector {
    pub fn ate(&self) -> f64 {
        self.values[0]
    }
}

/// Summarizes one word's matches.
///
/// Records are put in canonical `(treated_context_id, matched_context_id)`
/// order first, so the result does not depend on their input order.
pub fn featurize_word(
    word: &str,
    records: &[&MatchRecord],
    store: &EmbeddingStore,
    doc_coef: f64,
) -> Result<WordFeatureVector> {
    if records.is_empty() {
        return Err(Error::NoMatches(String::from(word)));
    }
    let mut recs: Vec<&MatchRecord> = records.to_vec();
    recs.sort_by_key(|r| (r.treated_context_id, r.matched_context_id));
    let n = recs.len() as f64;

    let sims: Vec<f64> = recs.iter().map(|r| r.similarity).collect();
    let effects: Vec<f64> = recs.iter().map(|r| r.effect()).collect();

    let ate = effects.iter().sum::<f64>() / n;

    let (mut wsum, mut wnum) = (0.0, 0.0);
    for (s, e) in sims.iter().zip(&effects) {
        let w = s.max(0.0);
        wsum += w;
        wnum += w * e;
    }
    let weighted_ate = if wsum > 0.0 { wnum / wsum } else { 0.0 };

    // highest similarity first; canonical order breaks ties
    let mut by_sim: Vec<usize> = (0..recs.len()).collect();
    by_sim.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
    let top: Vec<usize> = by_sim.iter().copied().take(TOP_K).collect();
    let top_n = top.len() as f64;
    let top5_ate = top.iter().map(|&i| effects[i]).sum::<f64>() / top_n;
    let top5_mean_sim = top.iter().map(|&i| sims[i]).sum::<f64>() / top_n;

    let mean_sim = sims.iter().sum::<f64>() / n;
    let max_sim = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let var = sims.iter().map(|s| (s - mean_sim) * (s - mean_sim)).sum::<f64>() / n;
    let std_sim = libm::sqrt(var);

    let closest = |label: Label| {
        recs.iter()
            .zip(&sims)
            .filter(|(r, _)| r.matched_label == label)
            .map(|(_, &s)| s)
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
    };
    let pos = closest(Label::Positive);
    let neg = closest(Label::Negative);

    let dim = store.dim();
    let mut delta = vec![0.0f64; dim];
    let mut max_abs = 0.0f64;
    for r in &recs {
        let t = store.require(r.treated_context_id)?;
        let m = store.require(r.matched_context_id)?;
        for ((d, &a), &b) in delta.iter_mut().zip(t).zip(m) {
            let diff = f64::from(a) - f64::from(b);
            *d += diff;
            max_abs = max_abs.max(libm::fabs(diff));
        }
    }
    for d in &mut delta {
        *d /= n;
    }
    let diff_norm = libm::sqrt(delta.iter().map(|d| d * d).sum::<f64>());
    let mut mags: Vec<f64> = delta.iter().map(|d| libm::fabs(*d)).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.resize(mags.len().max(3), 0.0);

    Ok(WordFeatureVector {
        word: String::from(word),
        values: [
            ate,
            weighted_ate,
            top5_ate,
            mean_sim,
            top5_mean_sim,
            max_sim,
            std_sim,
            pos.unwrap_or(0.0),
            neg.unwrap_or(0.0),
            doc_coef,
            diff_norm,
            mags[0],
            mags[1],
            mags[2],
            max_abs,
        ],
        n_matches: recs.len(),
        missing_pos: pos.is_none(),
        missing_neg: neg.is_none(),
    })
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
}

pub const MIN_STD: f64 = 1e-12;

impl Scaler {
    pub fn fit(rows: &[[f64; N_FEATURES]]) -> Result<Scaler> {
        if rows.len() < 2 {
            return Err(Error::TooFewRows { needed: 2, found: rows.len() });
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        let mut std = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean[j]) * (r[j] - mean[j])).sum::<f64>() / n;
            std[j] = libm::sqrt(var);
        }
        Ok(Scaler { mean, std })
    }

    /// `(x - mean) / std`, with near-constant features mapped to 0.
    pub fn transform(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            out[j] = if self.std[j] < MIN_STD { 0.0 } else { (row[j] - self.mean[j]) / self.std[j] };
        }
        out
    }

    pub fn transform_all(&self, rows: &[[f64; N_FEATURES]]) -> Vec<[f64; N_FEATURES]> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Fits a scaler on the vectors and returns them standardized.
pub fn standardize(vectors: &[WordFeatureVector]) -> Result<(Vec<[f64; N_FEATURES]>, Scaler)> {
    let rows: Vec<[f64; N_FEATURES]> = vectors.iter().map(|v| v.values).collect();
    let scaler = Scaler::fit(&rows)?;
    Ok((scaler.transform_all(&rows), scaler))
}
