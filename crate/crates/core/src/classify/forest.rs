use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{majority, Binned, DecisionTree, Grower, TreeParams};
use crate::error::{Error, Result};
use crate::rng;

/// How many features each split examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MtryRule {
    Sqrt,
    Log2,
    All,
}

impl MtryRule {
    pub fn count(self, n_features: usize) -> usize {
        let d = n_features as f64;
        let m = match self {
            MtryRule::Sqrt => d.sqrt().floor() as usize,
            MtryRule::Log2 => d.log2().floor() as usize,
            MtryRule::All => n_features,
        };
        m.clamp(1, n_features.max(1))
    }

    pub fn name(self) -> &'static str {
        match self {
            MtryRule::Sqrt => "sqrt",
            MtryRule::Log2 => "log2",
            MtryRule::All => "all",
        }
    }
}

impl FromStr for MtryRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(MtryRule::Sqrt),
            "log2" => Ok(MtryRule::Log2),
            "all" => Ok(MtryRule::All),
            other => Err(Error::InvalidArgument(format!("unknown mtry rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: MtryRule,
    pub bootstrap: bool,
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            mtry: MtryRule::Sqrt,
            bootstrap: true,
            tree: TreeParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub(crate) trees: Vec<DecisionTree>,
    pub(crate) n_classes: usize,
}

impl RandomForest {
    /// Majority vote, ties to the lower class index.
    pub fn predict_row(&self, row: ArrayView1<f64>) -> u32 {
        let mut votes = vec![0u32; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row) as usize] += 1;
        }
        majority(&votes)
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

/// Tree `t` draws all of its randomness from stream `t` of the seed, so the
/// forest is identical however the trees are scheduled.
pub fn train_random_forest(
    x: &Array2<f64>,
    labels: &[u32],
    n_classes: usize,
    params: &ForestParams,
) -> Result<RandomForest> {
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let n = x.nrows();
    let binned = Binned::new(x);
    let d = binned.n_features();
    let mtry = match params.mtry.count(d) {
        m if m >= d => None,
        m => Some(m),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(params.seed, t as u64);
            let samples: Vec<u32> = if params.bootstrap {
                (0..n).map(|_| r.gen_range(0..n as u32)).collect()
            } else {
                (0..n as u32).collect()
            };
            Grower::new(&binned, labels, n_classes, params.tree, mtry, Some(r)).grow(samples)
        })
        .collect();
    Ok(RandomForest { trees, n_classes })
}
