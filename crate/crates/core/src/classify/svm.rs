//! One-vs-rest linear SVM trained with Pegasos-style stochastic
//! subgradient descent on the L2-regularized hinge loss.
//!
//! The bias is an extra weight on a constant input of 1 and is regularized
//! with the rest.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    /// `classes x (inputs + 1)`; the last column is the bias.
    pub(crate) weights: Array2<f64>,
}

impl LinearSvm {
    pub fn scores(&self, row: ArrayView1<f64>) -> Vec<f64> {
        let d = row.len();
        self.weights
            .rows()
            .into_iter()
            .map(|w| w.slice(ndarray::s![..d]).dot(&row) + w[d])
            .collect()
    }

    pub fn predict_row(&self, row: ArrayView1<f64>) -> u32 {
        super::mlp::argmax(&self.scores(row)) as u32
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }
}

pub fn train_linear_svm(x: ArrayView2<f64>, labels: &[u32], n_classes: usize, params: &SvmParams) -> Result<LinearSvm> {
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("empty training matrix".into()));
    }
    if params.lambda.is_nan() || params.lambda <= 0.0 || params.epochs == 0 {
        return Err(Error::InvalidArgument("lambda and epochs must be positive".into()));
    }
    let (n, d) = x.dim();
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut weights = Array2::<f64>::zeros((n_classes, d + 1));
    for class in 0..n_classes {
        let mut order: Vec<usize> = (0..n).collect();
        let mut r = rng::stream(params.seed, class as u64);
        // w = scale * v, so shrinking is O(1)
        let mut v = vec![0.0f64; d + 1];
        let mut scale = 1.0f64;
        let mut sq_norm = 0.0f64;
        let mut t = 0usize;
        for _ in 0..params.epochs {
            order.shuffle(&mut r);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let row = x.row(i);
                let y = if labels[i] as usize == class { 1.0 } else { -1.0 };
                let margin = scale * (row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[d]);
                let shrink = 1.0 - eta * lambda;
                if shrink <= 0.0 {
                    // first step: w is reset to the subgradient step alone
                    v.iter_mut().for_each(|w| *w = 0.0);
                    scale = 1.0;
                    sq_norm = 0.0;
                } else {
                    scale *= shrink;
                    sq_norm *= shrink * shrink;
                }
                if y * margin < 1.0 {
                    let c = eta * y / scale;
                    for (k, &a) in row.iter().enumerate() {
                        let old = v[k];
                        v[k] += c * a;
                        sq_norm += scale * scale * (v[k] * v[k] - old * old);
                    }
                    let old = v[d];
                    v[d] += c;
                    sq_norm += scale * scale * (v[d] * v[d] - old * old);
                }
                let norm = sq_norm.max(0.0).sqrt();
                if norm > radius {
                    let f = radius / norm;
                    scale *= f;
                    sq_norm *= f * f;
                }
                if scale < 1e-100 {
                    v.iter_mut().for_each(|w| *w *= scale);
                    scale = 1.0;
                }
            }
        }
        for (k, w) in v.iter().enumerate() {
            weights[[class, k]] = w * scale;
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Diverged("non-finite SVM weight".into()));
    }
    Ok(LinearSvm { weights })
}
