//! Native classifiers: CART trees, random forests, softmax networks
//! (including logistic regression) and linear SVMs.

mod forest;
mod mlp;
mod persist;
mod search;
mod svm;
mod tree;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::encode::EncodedMatrix;
use crate::error::{Error, Result};

pub use forest::{train_random_forest, ForestParams, MtryRule, RandomForest};
pub use mlp::{adadelta_step, train_mlp, Activation, Dense, Gradients, Mlp, MlpFit, MlpParams, MomentumSchedule};
pub use persist::MODEL_FORMAT_VERSION;
pub use search::{grid_search, MlpGrid, SearchOutcome, SearchPoint};
pub use svm::{train_linear_svm, LinearSvm, SvmParams};
pub use tree::{gini, train_decision_tree, DecisionTree, Node, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    Mlp,
    Logistic,
    LinearSvm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learned {
    Tree(DecisionTree),
    Forest(RandomForest),
    Network(Mlp),
    Svm(LinearSvm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub training_error: f64,
    pub epochs_run: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub learned: Learned,
    pub width: usize,
    pub n_classes: usize,
    pub meta: TrainingMeta,
}

fn check_input(x: &EncodedMatrix) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::InvalidArgument("empty training matrix".into()));
    }
    Ok(())
}

fn finish(kind: ModelKind, learned: Learned, x: &EncodedMatrix, epochs_run: usize, seed: u64) -> Result<TrainedModel> {
    let mut model = TrainedModel {
        kind,
        learned,
        width: x.width(),
        n_classes: x.n_classes,
        meta: TrainingMeta {
            training_error: 0.0,
            epochs_run,
            seed,
        },
    };
    model.meta.training_error = model.error_on(x)?;
    Ok(model)
}

pub fn fit_decision_tree(x: &EncodedMatrix, params: &TreeParams) -> Result<TrainedModel> {
    check_input(x)?;
    if params.min_samples_split < 2 {
        return Err(Error::InvalidArgument("min_samples_split must be >= 2".into()));
    }
    let tree = train_decision_tree(&x.features, &x.labels, x.n_classes, *params);
    finish(ModelKind::DecisionTree, Learned::Tree(tree), x, 0, 0)
}

pub fn fit_random_forest(x: &EncodedMatrix, params: &ForestParams) -> Result<TrainedModel> {
    check_input(x)?;
    let forest = train_random_forest(&x.features, &x.labels, x.n_classes, params)?;
    finish(ModelKind::RandomForest, Learned::Forest(forest), x, 0, params.seed)
}

pub fn fit_mlp(x: &EncodedMatrix, params: &MlpParams) -> Result<TrainedModel> {
    check_input(x)?;
    let fit = train_mlp(x.features.view(), &x.labels, x.n_classes, params)?;
    let kind = if params.hidden_layers.is_empty() {
        ModelKind::Logistic
    } else {
        ModelKind::Mlp
    };
    finish(kind, Learned::Network(fit.model), x, fit.epochs_run, params.seed)
}

pub fn fit_logistic(x: &EncodedMatrix, params: &MlpParams) -> Result<TrainedModel> {
    let params = MlpParams {
        hidden_layers: Vec::new(),
        dropout: Vec::new(),
        ..params.clone()
    };
    fit_mlp(x, &params)
}

pub fn fit_linear_svm(x: &EncodedMatrix, params: &SvmParams) -> Result<TrainedModel> {
    check_input(x)?;
    let svm = train_linear_svm(x.features.view(), &x.labels, x.n_classes, params)?;
    finish(ModelKind::LinearSvm, Learned::Svm(svm), x, params.epochs, params.seed)
}

impl TrainedModel {
    pub fn predict(&self, x: &EncodedMatrix) -> Result<Vec<u32>> {
        if x.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                found: x.width(),
            });
        }
        let rows = x.features.axis_iter(Axis(0));
        Ok(match &self.learned {
            Learned::Tree(t) => rows.map(|r| t.predict_row(r)).collect(),
            Learned::Forest(f) => rows.map(|r| f.predict_row(r)).collect(),
            Learned::Svm(s) => rows.map(|r| s.predict_row(r)).collect(),
            Learned::Network(m) => {
                // bounded memory on large inputs
                let mut out = Vec::with_capacity(x.n_rows());
                for chunk in x.features.axis_chunks_iter(Axis(0), 4096) {
                    out.extend(m.predict(chunk));
                }
                out
            }
        })
    }

    /// Error rate against the matrix's own labels.
    pub fn error_on(&self, x: &EncodedMatrix) -> Result<f64> {
        Ok(error_rate(&self.predict(x)?, &x.labels))
    }
}

/// Share of mismatched predictions.
pub fn error_rate(predicted: &[u32], truth: &[u32]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "prediction/label length mismatch");
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(p, t)| p != t).count() as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_rate_cases() {
        assert_eq!(error_rate(&[0, 1, 1], &[0, 1, 1]), 0.0);
        assert_eq!(error_rate(&[1, 0], &[0, 1]), 1.0);
        assert_eq!(error_rate(&[0, 0, 1, 1], &[0, 1, 0, 1]), 0.5);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let x = EncodedMatrix::new(ndarray::array![[0.0], [1.0]], vec![0, 1], 2).unwrap();
        let m = fit_decision_tree(&x, &TreeParams::default()).unwrap();
        let wide = EncodedMatrix::new(ndarray::array![[0.0, 1.0]], vec![0], 2).unwrap();
        assert!(matches!(m.predict(&wide), Err(Error::WidthMismatch { .. })));
    }
}
