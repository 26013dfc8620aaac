//! Ranking and threshold metrics.

use alloc::vec::Vec;

use crate::corpus::Label;
use crate::{Error, Result};

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, with ties counting one half.
///
/// Computed from average ranks (Mann-Whitney U), `O(n log n)`.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l == Label::Positive).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::AucUndefined);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mean_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            if labels[k] == Label::Positive {
                rank_sum_pos += mean_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Fraction of rows whose predicted class (positive iff `p >= 0.5`) equals
/// the label. Empty input scores 0.
pub fn accuracy(probabilities: &[f64], labels: &[Label]) -> f64 {
    assert_eq!(probabilities.len(), labels.len());
    if labels.is_empty() {
        return 0.0;
    }
    let correct = probabilities
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| (p >= 0.5) == (l == Label::Positive))
        .count();
    correct as f64 / labels.len() as f64
}
