//! Feed-forward network with softmax output, trained by mini-batch
//! Adadelta on mean cross-entropy.
//!
//! With an empty hidden-layer list the network is multinomial logistic
//! regression.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

/// Momentum coefficient ramped linearly from `start` to `end` over
/// `ramp_epochs`, then held at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumSchedule {
    pub start: f64,
    pub end: f64,
    pub ramp_epochs: usize,
}

impl MomentumSchedule {
    pub const NONE: MomentumSchedule = MomentumSchedule {
        start: 0.0,
        end: 0.0,
        ramp_epochs: 1,
    };

    pub fn at(&self, epoch: usize) -> f64 {
        if self.ramp_epochs == 0 || epoch >= self.ramp_epochs {
            return self.end;
        }
        self.start + (self.end - self.start) * epoch as f64 / self.ramp_epochs as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    /// Per hidden layer; empty means no dropout.
    pub dropout: Vec<f64>,
    pub rho: f64,
    pub eps: f64,
    pub lr_scale: f64,
    pub momentum: MomentumSchedule,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_layers: vec![128, 128],
            activation: Activation::Relu,
            dropout: vec![0.2, 0.2],
            rho: 0.95,
            eps: 1e-6,
            lr_scale: 1.0,
            momentum: MomentumSchedule::NONE,
            epochs: 10,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl MlpParams {
    /// Two hidden layers of 1024 units.
    pub fn paper_scale() -> Self {
        Self {
            hidden_layers: vec![1024, 1024],
            ..Self::default()
        }
    }

    /// Multinomial logistic regression.
    pub fn logistic() -> Self {
        Self {
            hidden_layers: Vec::new(),
            dropout: Vec::new(),
            epochs: 30,
            batch_size: 32,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.hidden_layers.contains(&0) {
            return bad("hidden layer widths must be >= 1".into());
        }
        if !self.dropout.is_empty() && self.dropout.len() != self.hidden_layers.len() {
            return bad(format!(
                "{} dropout rates for {} hidden layers",
                self.dropout.len(),
                self.hidden_layers.len()
            ));
        }
        if self.dropout.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return bad("dropout rates must lie in [0, 1)".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho {} outside (0, 1)", self.rho));
        }
        if self.eps.is_nan() || self.eps <= 0.0 || self.lr_scale.is_nan() || self.lr_scale <= 0.0 {
            return bad("eps and lr_scale must be positive".into());
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("epochs and batch size must be positive".into());
        }
        Ok(())
    }

    fn dropout_rate(&self, layer: usize) -> f64 {
        self.dropout.get(layer).copied().unwrap_or(0.0)
    }
}

/// One Adadelta update for a single parameter.
///
/// Accumulators are updated in place; the returned value is the step to add
/// to the parameter.
#[inline]
pub fn adadelta_step(grad: f64, sq_grad: &mut f64, sq_step: &mut f64, rho: f64, eps: f64, lr_scale: f64) -> f64 {
    *sq_grad = rho * *sq_grad + (1.0 - rho) * grad * grad;
    let step = -((*sq_step + eps).sqrt() / (*sq_grad + eps).sqrt()) * grad * lr_scale;
    *sq_step = rho * *sq_step + (1.0 - rho) * step * step;
    step
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `inputs x outputs`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) layers: Vec<Dense>,
    pub(crate) activation: Activation,
}

/// Gradients in the same layout as [`Mlp::layers`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

struct Forward {
    /// Input to each layer (post activation and dropout).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Array2<f64>>,
    /// Dropout multipliers of each hidden layer.
    masks: Vec<Option<Array2<f64>>>,
    probs: Array2<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, hidden: &[usize], n_outputs: usize, activation: Activation, rng: &mut Rng) -> Self {
        let mut widths = vec![n_inputs];
        widths.extend_from_slice(hidden);
        widths.push(n_outputs);
        let layers = widths
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_fn((w[0], w[1]), |_| rng.gen_range(-limit..limit)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Self { layers, activation }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().unwrap().weights.ncols()
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    fn activate(&self, z: &Array2<f64>) -> Array2<f64> {
        match self.activation {
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Tanh => z.mapv(f64::tanh),
        }
    }

    fn forward(&self, x: ArrayView2<f64>, dropout: Option<(&MlpParams, &mut Rng)>) -> Forward {
        let mut inputs = vec![x.to_owned()];
        let mut pre = Vec::new();
        let mut masks = Vec::new();
        let mut dropout = dropout;
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = inputs[l].dot(&layer.weights) + &layer.bias;
            if l == last {
                inputs.push(z);
                break;
            }
            let mut a = self.activate(&z);
            let mask = match dropout.as_mut() {
                Some((params, rng)) if params.dropout_rate(l) > 0.0 => {
                    let p = params.dropout_rate(l);
                    let keep = 1.0 / (1.0 - p);
                    let m = Array2::from_shape_fn(a.raw_dim(), |_| if rng.gen::<f64>() < p { 0.0 } else { keep });
                    a *= &m;
                    Some(m)
                }
                _ => None,
            };
            pre.push(z);
            masks.push(mask);
            inputs.push(a);
        }
        let logits = inputs.pop().unwrap();
        Forward {
            inputs,
            pre,
            masks,
            probs: softmax(logits),
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x, None).probs
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<u32> {
        self.predict_proba(x)
            .rows()
            .into_iter()
            .map(|r| argmax(r.as_slice().unwrap()) as u32)
            .collect()
    }

    fn backward(&self, fwd: &Forward, labels: &[u32]) -> (f64, Gradients) {
        let b = labels.len() as f64;
        let mut loss = 0.0;
        let mut delta = fwd.probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            loss -= fwd.probs[[i, y as usize]].max(f64::MIN_POSITIVE).ln();
            delta[[i, y as usize]] -= 1.0;
        }
        delta /= b;
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &fwd.inputs[l];
            grads.push(Dense {
                weights: input.t().dot(&delta),
                bias: delta.sum_axis(Axis(0)),
            });
            if l == 0 {
                break;
            }
            let mut upstream = delta.dot(&self.layers[l].weights.t());
            if let Some(m) = &fwd.masks[l - 1] {
                upstream *= m;
            }
            let z = &fwd.pre[l - 1];
            match self.activation {
                Activation::Relu => upstream.zip_mut_with(z, |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                }),
                Activation::Tanh => upstream.zip_mut_with(z, |g, &z| *g *= 1.0 - z.tanh().powi(2)),
            }
            delta = upstream;
        }
        grads.reverse();
        (loss / b, Gradients { layers: grads })
    }

    /// Mean cross-entropy and its gradient, without dropout.
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, labels: &[u32]) -> (f64, Gradients) {
        let fwd = self.forward(x, None);
        self.backward(&fwd, labels)
    }

    pub fn loss(&self, x: ArrayView2<f64>, labels: &[u32]) -> f64 {
        let probs = self.predict_proba(x);
        -labels
            .iter()
            .enumerate()
            .map(|(i, &y)| probs[[i, y as usize]].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / labels.len() as f64
    }

    /// All parameters, layer by layer, weights (row-major) then bias.
    pub fn flat_parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_flat_parameters(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = *it.next().expect("parameter vector too short");
            }
        }
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }
}

fn softmax(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    logits
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-parameter optimizer state for one layer.
struct LayerState {
    sq_grad_w: Array2<f64>,
    sq_step_w: Array2<f64>,
    vel_w: Array2<f64>,
    sq_grad_b: Array1<f64>,
    sq_step_b: Array1<f64>,
    vel_b: Array1<f64>,
}

fn update<D: ndarray::Dimension>(
    param: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    sq_grad: &mut ndarray::Array<f64, D>,
    sq_step: &mut ndarray::Array<f64, D>,
    vel: &mut ndarray::Array<f64, D>,
    params: &MlpParams,
    momentum: f64,
) {
    let (rho, eps, lr) = (params.rho, params.eps, params.lr_scale);
    ndarray::Zip::from(param)
        .and(grad)
        .and(sq_grad)
        .and(sq_step)
        .and(vel)
        .for_each(|p, &g, eg, ex, v| {
            let step = adadelta_step(g, eg, ex, rho, eps, lr);
            *v = momentum * *v + step;
            *p += *v;
        });
}

/// Result of a training run.
pub struct MlpFit {
    pub model: Mlp,
    pub epochs_run: usize,
    pub final_loss: f64,
}

pub fn train_mlp(x: ArrayView2<f64>, labels: &[u32], n_classes: usize, params: &MlpParams) -> Result<MlpFit> {
    params.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty training matrix".into()));
    }
    if labels.len() != n {
        return Err(Error::InvalidArgument("label count differs from row count".into()));
    }
    let mut init_rng = rng::stream(params.seed, rng::key("init"));
    let mut shuffle_rng = rng::stream(params.seed, rng::key("shuffle"));
    let mut dropout_rng = rng::stream(params.seed, rng::key("dropout"));
    let mut model = Mlp::init(x.ncols(), &params.hidden_layers, n_classes.max(1), params.activation, &mut init_rng);
    let mut state: Vec<LayerState> = model
        .layers
        .iter()
        .map(|l| LayerState {
            sq_grad_w: Array2::zeros(l.weights.raw_dim()),
            sq_step_w: Array2::zeros(l.weights.raw_dim()),
            vel_w: Array2::zeros(l.weights.raw_dim()),
            sq_grad_b: Array1::zeros(l.bias.raw_dim()),
            sq_step_b: Array1::zeros(l.bias.raw_dim()),
            vel_b: Array1::zeros(l.bias.raw_dim()),
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_labels = Vec::with_capacity(params.batch_size);
    let mut final_loss = f64::NAN;
    for epoch in 0..params.epochs {
        let momentum = params.momentum.at(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(params.batch_size) {
            let batch = x.select(Axis(0), chunk);
            batch_labels.clear();
            batch_labels.extend(chunk.iter().map(|&i| labels[i]));
            let fwd = model.forward(batch.view(), Some((params, &mut dropout_rng)));
            let (loss, grads) = model.backward(&fwd, &batch_labels);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("non-finite loss at epoch {epoch}")));
            }
            epoch_loss += loss * chunk.len() as f64;
            for ((layer, g), st) in model.layers.iter_mut().zip(&grads.layers).zip(&mut state) {
                update(&mut layer.weights, &g.weights, &mut st.sq_grad_w, &mut st.sq_step_w, &mut st.vel_w, params, momentum);
                update(&mut layer.bias, &g.bias, &mut st.sq_grad_b, &mut st.sq_step_b, &mut st.vel_b, params, momentum);
            }
        }
        final_loss = epoch_loss / n as f64;
        if model.layers.iter().any(|l| l.weights.iter().any(|w| !w.is_finite())) {
            return Err(Error::Diverged(format!("non-finite weight after epoch {epoch}")));
        }
    }
    Ok(MlpFit {
        model,
        epochs_run: params.epochs,
        final_loss,
    })
}
