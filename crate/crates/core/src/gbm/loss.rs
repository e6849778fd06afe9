//! Multinomial deviance: softmax link, gradients, and Newton hessians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized per-class probabilities; every entry lies in (0,1) and the
/// vector sums to one within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities(Vec<f64>);

impl ClassProbabilities {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    /// Index of the most probable class; exact ties resolve to the lowest
    /// class index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = k;
            }
        }
        best
    }
}

impl std::ops::Index<usize> for ClassProbabilities {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Overflow-safe softmax: `p_k = exp(s_k - m) / sum_j exp(s_j - m)` with
/// `m = max(s)`.
pub fn softmax(scores: &[f64]) -> Result<ClassProbabilities> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("softmax input must be finite".into()));
    }
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(ClassProbabilities(exps.iter().map(|e| e / total).collect()))
}

/// Gradient and hessian of the weighted multinomial deviance at one row.
///
/// `grad_k = w (p_k - [k == label])`, `hess_k = w p_k (1 - p_k)`.
pub fn deviance_grad_hess(
    label: usize,
    p: &ClassProbabilities,
    weight: f64,
) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(label < p.n_classes());
    debug_assert!(weight >= 0.0);
    let mut grad = Vec::with_capacity(p.n_classes());
    let mut hess = Vec::with_capacity(p.n_classes());
    for (k, &pk) in p.as_slice().iter().enumerate() {
        let indicator = if k == label { 1.0 } else { 0.0 };
        grad.push(weight * (pk - indicator));
        hess.push(weight * pk * (1.0 - pk));
    }
    (grad, hess)
}

/// Weighted deviance contribution of one row: `-w ln p_label`.
pub fn row_deviance(label: usize, p: &ClassProbabilities, weight: f64) -> f64 {
    -weight * p[label].ln()
}
