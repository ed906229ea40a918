//! Imputers fitted on a training set and applied to any dataset with the
//! same schema: mode/mean replacement, random donor replacement, k-NN hot
//! deck and per-feature prediction models.
//!
//! Every transform returns a dataset without missing cells whose observed
//! cells and labels are those of the input.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{self, ForestParams, MlpParams, SvmParams, TrainedModel};
use crate::data::{Cell, Dataset, FeatureKind, Schema};
use crate::encode::{EncodedMatrix, EncoderModel, DEGENERATE_STD};
use crate::error::{Error, Result};
use crate::perturb::argmax_first;
use crate::rng;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    Logistic,
    RandomForest,
    LinearSvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ImputeMethod {
    Mode,
    RandomReplacement,
    Knn { k: usize },
    Model { predictor: Predictor },
}

impl ImputeMethod {
    /// Short name, also accepted by `FromStr`.
    pub fn name(&self) -> &'static str {
        match self {
            ImputeMethod::Mode => "mode",
            ImputeMethod::RandomReplacement => "random_replacement",
            ImputeMethod::Knn { .. } => "knn",
            ImputeMethod::Model { predictor } => match predictor {
                Predictor::Logistic => "model_logistic",
                Predictor::RandomForest => "model_random_forest",
                Predictor::LinearSvm => "model_svm",
            },
        }
    }

    pub fn with_k(self, k: usize) -> Self {
        match self {
            ImputeMethod::Knn { .. } => ImputeMethod::Knn { k },
            other => other,
        }
    }
}

impl fmt::Display for ImputeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImputeMethod {
    type Err = Error;

    /// `knn` gets the default k; use [`ImputeMethod::with_k`] to change it.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mode" => ImputeMethod::Mode,
            "random_replacement" | "random" => ImputeMethod::RandomReplacement,
            "knn" => ImputeMethod::Knn { k: DEFAULT_K },
            "model_logistic" | "logistic" => ImputeMethod::Model {
                predictor: Predictor::Logistic,
            },
            "model_random_forest" | "random_forest" => ImputeMethod::Model {
                predictor: Predictor::RandomForest,
            },
            "model_svm" | "svm" | "linear_svm" => ImputeMethod::Model {
                predictor: Predictor::LinearSvm,
            },
            other => return Err(Error::InvalidArgument(format!("unknown imputation method {other:?}"))),
        })
    }
}

/// Prediction state for one target feature.
#[derive(Debug, Clone)]
enum FeatureModel {
    Constant(u32),
    Fitted { encoder: EncoderModel, model: TrainedModel },
}

#[derive(Debug, Clone)]
enum State {
    Mode,
    Donors(Dataset),
    Knn {
        donors: Dataset,
        k: usize,
        /// Train std of each continuous feature; `None` when degenerate or
        /// categorical.
        scale: Vec<Option<f64>>,
    },
    Model(Vec<Option<FeatureModel>>),
}

#[derive(Debug, Clone)]
pub struct ImputerModel {
    method: ImputeMethod,
    schema: Arc<Schema>,
    /// Train mode (categorical) or mean (continuous) of every feature.
    fill: Vec<Cell>,
    state: State,
    seed: u64,
    notes: Vec<String>,
}

/// Most frequent observed category (ties to the lower index) or mean.
fn train_fill(train: &Dataset) -> Result<Vec<Cell>> {
    let schema = train.schema();
    let mut fill = Vec::with_capacity(train.n_features());
    for (j, f) in schema.features.iter().enumerate() {
        let column = (0..train.n_rows()).map(|i| train.cell(i, j));
        let cell = match &f.kind {
            FeatureKind::Categorical { categories } => {
                let mut counts = vec![0usize; categories.len()];
                for c in column {
                    if let Cell::Category(c) = c {
                        counts[c as usize] += 1;
                    }
                }
                argmax_first(&counts).map(|c| Cell::Category(c as u32))
            }
            FeatureKind::Continuous => {
                let (sum, n) = column.fold((0.0, 0usize), |(s, n), c| match c {
                    Cell::Value(v) => (s + v, n + 1),
                    _ => (s, n),
                });
                (n > 0).then(|| Cell::Value(sum / n as f64))
            }
        };
        fill.push(cell.ok_or_else(|| Error::feature(&f.name, "every training value is missing"))?);
    }
    Ok(fill)
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Fit an imputer on training data. `seed` drives donor draws and the
/// prediction models.
pub fn fit(method: ImputeMethod, train: &Dataset, seed: u64) -> Result<ImputerModel> {
    let fill = train_fill(train)?;
    let mut notes = Vec::new();
    let state = match method {
        ImputeMethod::Mode => State::Mode,
        ImputeMethod::RandomReplacement => State::Donors(train.complete_cases()?),
        ImputeMethod::Knn { k } => {
            if k == 0 {
                return Err(Error::InvalidArgument("k must be at least 1".into()));
            }
            let donors = train.complete_cases()?;
            let k = if k > donors.n_rows() {
                notes.push(format!(
                    "k={k} exceeds the {} complete training cases; clamped",
                    donors.n_rows()
                ));
                donors.n_rows()
            } else {
                k
            };
            let scale = train
                .schema()
                .features
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    if f.is_categorical() {
                        return None;
                    }
                    let observed: Vec<f64> = (0..train.n_rows())
                        .filter_map(|i| match train.cell(i, j) {
                            Cell::Value(v) => Some(v),
                            _ => None,
                        })
                        .collect();
                    let s = sample_std(&observed);
                    (s >= DEGENERATE_STD).then_some(s)
                })
                .collect();
            State::Knn { donors, k, scale }
        }
        ImputeMethod::Model { predictor } => State::Model(fit_models(predictor, train, seed, &mut notes)?),
    };
    Ok(ImputerModel {
        method,
        schema: Arc::clone(train.schema()),
        fill,
        state,
        seed,
        notes,
    })
}

fn fit_models(predictor: Predictor, train: &Dataset, seed: u64, notes: &mut Vec<String>) -> Result<Vec<Option<FeatureModel>>> {
    let schema = train.schema();
    let targets: Vec<usize> = (0..train.n_features())
        .filter(|&j| (0..train.n_rows()).any(|i| train.cell(i, j).is_missing()))
        .collect();
    let mut models = vec![None; train.n_features()];
    if targets.is_empty() {
        return Ok(models);
    }
    let complete = train.complete_cases()?;
    for j in targets {
        let f = &schema.features[j];
        let FeatureKind::Categorical { categories } = &f.kind else {
            notes.push(format!("feature {:?} is continuous; imputed with the train mean", f.name));
            continue;
        };
        let y: Vec<u32> = (0..complete.n_rows())
            .map(|i| match complete.cell(i, j) {
                Cell::Category(c) => c,
                _ => unreachable!("complete case"),
            })
            .collect();
        if y.iter().all(|&c| c == y[0]) {
            notes.push(format!(
                "feature {:?} is constant on complete cases; constant predictor",
                f.name
            ));
            models[j] = Some(FeatureModel::Constant(y[0]));
            continue;
        }
        let encoder = EncoderModel::fit_excluding(&complete, &[j])?;
        let x = EncodedMatrix::new(encoder.encode(&complete)?.features, y, categories.len())?;
        let model_seed = rng::derive(seed, &format!("impute-model/{j}"));
        let model = match predictor {
            Predictor::Logistic => classify::fit_logistic(
                &x,
                &MlpParams {
                    seed: model_seed,
                    ..MlpParams::logistic()
                },
            )?,
            Predictor::RandomForest => classify::fit_random_forest(
                &x,
                &ForestParams {
                    seed: model_seed,
                    ..Default::default()
                },
            )?,
            Predictor::LinearSvm => classify::fit_linear_svm(
                &x,
                &SvmParams {
                    seed: model_seed,
                    ..Default::default()
                },
            )?,
        };
        models[j] = Some(FeatureModel::Fitted { encoder, model });
    }
    Ok(models)
}

impl ImputerModel {
    pub fn method(&self) -> ImputeMethod {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Warnings raised while fitting (k clamping, degenerate targets).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Train mode or mean used for feature `j`.
    pub fn fill_value(&self, j: usize) -> Cell {
        self.fill[j]
    }

    /// Number of donors available to donor-based methods.
    pub fn donor_count(&self) -> Option<usize> {
        match &self.state {
            State::Donors(d) | State::Knn { donors: d, .. } => Some(d.n_rows()),
            _ => None,
        }
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.schema().features != self.schema.features {
            return Err(Error::Schema("dataset schema differs from the imputer's".into()));
        }
        let k = ds.n_features();
        let rows: Vec<Vec<Cell>> = match &self.state {
            State::Mode => (0..ds.n_rows()).map(|i| self.prefill(ds.row(i))).collect(),
            State::Donors(donors) => (0..ds.n_rows())
                .into_par_iter()
                .map(|i| {
                    let row = ds.row(i);
                    if row.iter().all(|c| !c.is_missing()) {
                        return row.to_vec();
                    }
                    let mut r = rng::stream(self.seed, i as u64);
                    let donor = donors.row(r.gen_range(0..donors.n_rows()));
                    row.iter()
                        .zip(donor)
                        .map(|(&c, &d)| if c.is_missing() { d } else { c })
                        .collect()
                })
                .collect(),
            State::Knn { donors, k, scale } => (0..ds.n_rows())
                .into_par_iter()
                .map(|i| self.knn_fill(ds.row(i), donors, *k, scale))
                .collect(),
            State::Model(models) => return self.model_transform(ds, models),
        };
        let mut cells = Vec::with_capacity(ds.n_rows() * k);
        for r in rows {
            cells.extend(r);
        }
        Ok(ds.with_cells(cells))
    }

    fn prefill(&self, row: &[Cell]) -> Vec<Cell> {
        row.iter()
            .zip(&self.fill)
            .map(|(&c, &f)| if c.is_missing() { f } else { c })
            .collect()
    }

    fn knn_fill(&self, row: &[Cell], donors: &Dataset, k: usize, scale: &[Option<f64>]) -> Vec<Cell> {
        if row.iter().all(|c| !c.is_missing()) {
            return row.to_vec();
        }
        if row.iter().all(|c| c.is_missing()) {
            return self.fill.clone();
        }
        let neighbors = nearest(row, donors, k, scale);
        row.iter()
            .enumerate()
            .map(|(j, &c)| {
                if !c.is_missing() {
                    return c;
                }
                match &self.schema.features[j].kind {
                    FeatureKind::Categorical { categories } => {
                        let mut counts = vec![0usize; categories.len()];
                        for &(_, d) in &neighbors {
                            if let Cell::Category(v) = donors.cell(d, j) {
                                counts[v as usize] += 1;
                            }
                        }
                        let top = *counts.iter().max().unwrap();
                        // neighbors are sorted, so the first hit is the nearest
                        neighbors
                            .iter()
                            .map(|&(_, d)| donors.cell(d, j))
                            .find(|v| matches!(v, Cell::Category(v) if counts[*v as usize] == top))
                            .unwrap()
                    }
                    FeatureKind::Continuous => {
                        let sum: f64 = neighbors
                            .iter()
                            .map(|&(_, d)| match donors.cell(d, j) {
                                Cell::Value(v) => v,
                                _ => unreachable!("complete donor"),
                            })
                            .sum();
                        Cell::Value(sum / neighbors.len() as f64)
                    }
                }
            })
            .collect()
    }

    fn model_transform(&self, ds: &Dataset, models: &[Option<FeatureModel>]) -> Result<Dataset> {
        let k = ds.n_features();
        let prefilled: Vec<Cell> = (0..ds.n_rows()).flat_map(|i| self.prefill(ds.row(i))).collect();
        let filled_ds = ds.with_cells(prefilled.clone());
        let mut cells = prefilled;
        for (j, model) in models.iter().enumerate() {
            let Some(model) = model else { continue };
            let rows: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.cell(i, j).is_missing()).collect();
            if rows.is_empty() {
                continue;
            }
            let predicted: Vec<u32> = match model {
                FeatureModel::Constant(c) => vec![*c; rows.len()],
                FeatureModel::Fitted { encoder, model } => {
                    let x = encoder.encode(&filled_ds.select_rows(&rows)?)?;
                    model.predict(&x)?
                }
            };
            for (&i, &c) in rows.iter().zip(&predicted) {
                cells[i * k + j] = Cell::Category(c);
            }
        }
        Ok(ds.with_cells(cells))
    }
}

/// Distance from a query to a complete donor over the query's observed
/// features: one per categorical mismatch plus the squared standardized
/// difference of each continuous feature.
pub fn distance(query: &[Cell], donor: &[Cell], scale: &[Option<f64>]) -> f64 {
    let mut d = 0.0;
    for ((q, v), s) in query.iter().zip(donor).zip(scale) {
        match (q, v) {
            (Cell::Category(a), Cell::Category(b)) => {
                if a != b {
                    d += 1.0;
                }
            }
            (Cell::Value(a), Cell::Value(b)) => {
                if let Some(s) = s {
                    let z = (a - b) / s;
                    d += z * z;
                }
            }
            _ => {}
        }
    }
    d
}

/// The `k` donors closest to `query` as `(distance, donor index)`, sorted,
/// ties broken by the lower donor index.
pub fn nearest(query: &[Cell], donors: &Dataset, k: usize, scale: &[Option<f64>]) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = (0..donors.n_rows())
        .map(|d| (distance(query, donors.row(d), scale), d))
        .collect();
    let k = k.min(all.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < all.len() {
        all.select_nth_unstable_by(k, cmp);
        all.truncate(k);
    }
    all.sort_unstable_by(cmp);
    all
}
