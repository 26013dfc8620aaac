//! L2-regularized binary logistic regression.
//!
//! Objective over `n` rows with labels `y ∈ {-1, +1}`:
//!
//! ```text
//! L(w, b) = (1/n) Σ log(1 + exp(-y (⟨x, w⟩ + b))) + (λ/2) ‖w‖²
//! ```
//!
//! The bias is not penalized. Minimization is full-batch L-BFGS with an
//! Armijo backtracking line search; every accepted step strictly decreases
//! the objective, so the recorded loss history is non-increasing.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Label;
use crate::linalg::{dot, norm, sparse_dot, SparseVec};
use crate::{Error, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub l2_strength: f64,
    pub max_iter: usize,
    /// Stop once the Euclidean norm of the full gradient drops below this.
    pub tol: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { l2_strength: 1.0, max_iter: 500, tol: 1e-8 }
    }
}

/// Training rows for the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub rows: Vec<SparseVec>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn from_dense(rows: &[Vec<f64>], labels: &[Label]) -> Dataset {
        let dim = rows.first().map_or(0, Vec::len);
        Dataset {
            dim,
            rows: rows
                .iter()
                .map(|r| r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
                .collect(),
            labels: labels.to_vec(),
        }
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&Label::Positive) && self.labels.contains(&Label::Negative)
    }
}

/// The regularized mean logistic loss over a dataset. Parameters are laid
/// out as `[w_0 .. w_{d-1}, b]`.
pub struct Objective<'a> {
    data: &'a Dataset,
    l2: f64,
}

impl<'a> Objective<'a> {
    pub fn new(data: &'a Dataset, l2_strength: f64) -> Self {
        Objective { data, l2: l2_strength }
    }

    pub fn n_params(&self) -> usize {
        self.data.dim + 1
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let (w, b) = params.split_at(self.data.dim);
        let n = self.data.rows.len() as f64;
        let data_loss: f64 = self
            .data
            .rows
            .iter()
            .zip(&self.data.labels)
            .map(|(x, y)| softplus(-y.value() * (sparse_dot(x, w) + b[0])))
            .sum();
        data_loss / n + 0.5 * self.l2 * dot(w, w)
    }

    pub fn loss_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let d = self.data.dim;
        let (w, b) = params.split_at(d);
        let n = self.data.rows.len() as f64;
        let mut grad = vec![0.0; d + 1];
        let mut data_loss = 0.0;
        for (x, y) in self.data.rows.iter().zip(&self.data.labels) {
            let yv = y.value();
            let margin = yv * (sparse_dot(x, w) + b[0]);
            data_loss += softplus(-margin);
            // d/dm softplus(-m) = -sigmoid(-m)
            let coef = -yv * sigmoid(-margin);
            for &(i, v) in x {
                grad[i] += coef * v;
            }
            grad[d] += coef;
        }
        for g in &mut grad {
            *g /= n;
        }
        for i in 0..d {
            grad[i] += self.l2 * w[i];
        }
        (data_loss / n + 0.5 * self.l2 * dot(w, w), grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value at the start and after each accepted step.
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Fit {
    pub fn decision(&self, x: &[(usize, f64)]) -> f64 {
        sparse_dot(x, &self.weights) + self.bias
    }
}

const HISTORY: usize = 10;
const ARMIJO_C: f64 = 1e-4;

/// Fits the model from zero initialization. Deterministic.
pub fn fit(data: &Dataset, opts: &TrainOptions) -> Result<Fit> {
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    // written so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(opts.l2_strength >= 0.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "l2 strength must be >= 0, got {}",
            opts.l2_strength
        )));
    }
    let obj = Objective::new(data, opts.l2_strength);
    let mut params = vec![0.0; obj.n_params()];
    let (mut loss, mut grad) = obj.loss_and_grad(&params);
    if !loss.is_finite() {
        return Err(Error::Diverged);
    }
    let mut history = vec![loss];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = norm(&grad) <= opts.tol;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut dir = two_loop(&grad, &memory);
        let mut slope = dot(&grad, &dir);
        // not a descent direction (or NaN): restart from steepest descent
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(slope < 0.0) {
            memory.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        let mut step = if memory.is_empty() { 1.0 / norm(&grad).max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + step * d).collect();
            let (trial_loss, trial_grad) = obj.loss_and_grad(&trial);
            if !trial_loss.is_finite() {
                step *= 0.5;
                continue;
            }
            if trial_loss <= loss + ARMIJO_C * step * slope && trial_loss < loss {
                accepted = Some((trial, trial_loss, trial_grad));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss, next_grad)) = accepted else {
            // No decrease is representable along the search direction:
            // we are at the optimum to machine precision.
            converged = true;
            break;
        };
        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if memory.len() == HISTORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        params = next;
        loss = next_loss;
        grad = next_grad;
        history.push(loss);
        converged = norm(&grad) <= opts.tol;
    }
    if !loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Diverged);
    }
    let bias = params.pop().unwrap_or(0.0);
    Ok(Fit { weights: params, bias, loss_history: history, iterations, converged })
}

fn two_loop(grad: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
