//! Exhaustive grid search minimizing training error.

use serde::{Deserialize, Serialize};

use super::mlp::{MlpParams, MomentumSchedule};
use super::TrainedModel;
use crate::encode::EncodedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint<P> {
    pub params: P,
    pub training_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome<P> {
    pub best: P,
    pub best_index: usize,
    pub trace: Vec<SearchPoint<P>>,
}

/// Train one model per grid point and keep the one with the lowest
/// training error; ties go to the earlier point.
pub fn grid_search<P, F>(grid: &[P], train: &EncodedMatrix, build: F) -> Result<SearchOutcome<P>>
where
    P: Clone,
    F: Fn(&P, &EncodedMatrix) -> Result<TrainedModel>,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty search grid".into()));
    }
    let mut trace = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in grid.iter().enumerate() {
        let point = match build(p, train).and_then(|m| m.error_on(train)) {
            Ok(err) => {
                if best.is_none_or(|(_, b)| err < b) {
                    best = Some((i, err));
                }
                SearchPoint {
                    params: p.clone(),
                    training_error: Some(err),
                    error: None,
                }
            }
            Err(e) => SearchPoint {
                params: p.clone(),
                training_error: None,
                error: Some(e.to_string()),
            },
        };
        trace.push(point);
    }
    match best {
        Some((i, _)) => Ok(SearchOutcome {
            best: grid[i].clone(),
            best_index: i,
            trace,
        }),
        None => Err(Error::SearchFailed(
            trace
                .iter()
                .filter_map(|p| p.error.clone())
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}

/// MLP search axes. Expansion order: momentum outermost, then dropout,
/// then learning-rate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpGrid {
    pub momentum: Vec<MomentumSchedule>,
    /// One rate applied to every hidden layer.
    pub dropout: Vec<f64>,
    pub lr_scale: Vec<f64>,
}

impl MlpGrid {
    pub fn expand(&self, base: &MlpParams) -> Vec<MlpParams> {
        let mut out = Vec::new();
        for m in &self.momentum {
            for &p in &self.dropout {
                for &lr in &self.lr_scale {
                    out.push(MlpParams {
                        momentum: *m,
                        dropout: vec![p; base.hidden_layers.len()],
                        lr_scale: lr,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.momentum.len() * self.dropout.len() * self.lr_scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
