//! Controlled missing-data perturbation of categorical features.
//!
//! `delta` is the target TOTAL missing fraction over categorical cells,
//! pre-existing missingness included. Exactly
//! `round(delta * n * K_cat) - pre_existing` observed cells are masked, so
//! the achieved fraction is exact.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Dataset};
use crate::error::{Error, Result};
use crate::rng;

/// Weight of a focus-category cell relative to any other observed cell.
pub const MNAR_FOCUS_WEIGHT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    #[default]
    Mcar,
    Mnar,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Mcar => "mcar",
            Mechanism::Mnar => "mnar",
        }
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcar" => Ok(Mechanism::Mcar),
            "mnar" => Ok(Mechanism::Mnar),
            other => Err(Error::InvalidArgument(format!("unknown mechanism {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub mechanism: Mechanism,
    pub delta: f64,
    pub seed: u64,
    /// Feature name to focus category, MNAR only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mnar_focus: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReceipt {
    pub mechanism: Mechanism,
    pub delta: f64,
    pub seed: u64,
    pub categorical_cells: usize,
    pub pre_existing_missing: usize,
    pub target_missing: usize,
    /// `(row, feature)` pairs masked by this call, sorted.
    pub masked: Vec<(usize, usize)>,
    pub achieved_fraction: f64,
}

pub fn validate_delta(delta: f64) -> Result<()> {
    if delta == 0.0 || (0.05..=0.95).contains(&delta) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "delta {delta} must be 0 or within [0.05, 0.95]"
        )))
    }
}

struct Plan {
    categorical: Vec<usize>,
    pre: usize,
    target: usize,
    total: usize,
    observed: Vec<(usize, usize)>,
}

fn plan(ds: &Dataset, delta: f64) -> Result<Plan> {
    validate_delta(delta)?;
    let categorical: Vec<usize> = ds.schema().categorical_features().collect();
    if categorical.is_empty() {
        return Err(Error::InvalidArgument("dataset has no categorical feature".into()));
    }
    let (pre, total) = ds.categorical_missing();
    // round half up
    let target = (delta * total as f64 + 0.5).floor() as usize;
    if pre > target && delta > 0.0 {
        return Err(Error::ExcessMissingness {
            existing: pre as f64 / total as f64,
            delta,
        });
    }
    let mut observed = Vec::with_capacity(total - pre);
    for i in 0..ds.n_rows() {
        for &j in &categorical {
            if !ds.cell(i, j).is_missing() {
                observed.push((i, j));
            }
        }
    }
    Ok(Plan {
        categorical,
        pre,
        target,
        total,
        observed,
    })
}

fn apply(
    ds: &Dataset,
    plan: &Plan,
    chosen: impl Iterator<Item = usize>,
    mechanism: Mechanism,
    delta: f64,
    seed: u64,
) -> (Dataset, PerturbationReceipt) {
    let mut masked: Vec<(usize, usize)> = chosen.map(|c| plan.observed[c]).collect();
    masked.sort_unstable();
    let mut cells = ds.cells().to_vec();
    let k = ds.n_features();
    for &(i, j) in &masked {
        cells[i * k + j] = Cell::Missing;
    }
    let receipt = PerturbationReceipt {
        mechanism,
        delta,
        seed,
        categorical_cells: plan.total,
        pre_existing_missing: plan.pre,
        target_missing: plan.target.max(plan.pre),
        achieved_fraction: (plan.pre + masked.len()) as f64 / plan.total as f64,
        masked,
    };
    (ds.with_cells(cells), receipt)
}

/// Mask observed categorical cells uniformly at random without replacement.
pub fn perturb_mcar(ds: &Dataset, delta: f64, seed: u64) -> Result<(Dataset, PerturbationReceipt)> {
    let plan = plan(ds, delta)?;
    let amount = plan.target.saturating_sub(plan.pre);
    if delta == 0.0 || amount == 0 {
        return Ok(apply(ds, &plan, std::iter::empty(), Mechanism::Mcar, delta, seed));
    }
    let mut rng = rng::stream(seed, rng::key("perturb"));
    let chosen = index::sample(&mut rng, plan.observed.len(), amount);
    Ok(apply(ds, &plan, chosen.into_iter(), Mechanism::Mcar, delta, seed))
}

/// Mask observed categorical cells without replacement, with probability
/// proportional to [`MNAR_FOCUS_WEIGHT`] for cells holding their feature's
/// focus category and 1 otherwise.
pub fn perturb_mnar(
    ds: &Dataset,
    delta: f64,
    seed: u64,
    focus: &BTreeMap<String, String>,
) -> Result<(Dataset, PerturbationReceipt)> {
    if focus.is_empty() {
        return Err(Error::InvalidArgument("MNAR focus map is empty".into()));
    }
    let schema = ds.schema();
    let mut focus_of = vec![None; ds.n_features()];
    for (name, token) in focus {
        let j = schema
            .feature_index(name)
            .ok_or_else(|| Error::feature(name, "not in schema"))?;
        let f = &schema.features[j];
        if !f.is_categorical() {
            return Err(Error::feature(name, "MNAR focus needs a categorical feature"));
        }
        let c = f
            .category_index(token)
            .ok_or_else(|| Error::feature(name, format!("focus category {token:?} not in schema")))?;
        focus_of[j] = Some(c as u32);
    }
    let plan = plan(ds, delta)?;
    let amount = plan.target.saturating_sub(plan.pre);
    if delta == 0.0 || amount == 0 {
        return Ok(apply(ds, &plan, std::iter::empty(), Mechanism::Mnar, delta, seed));
    }
    debug_assert!(plan.categorical.iter().all(|&j| j < focus_of.len()));
    let weights: Vec<f64> = plan
        .observed
        .iter()
        .map(|&(i, j)| match (ds.cell(i, j), focus_of[j]) {
            (Cell::Category(c), Some(f)) if c == f => MNAR_FOCUS_WEIGHT,
            _ => 1.0,
        })
        .collect();
    let mut rng = rng::stream(seed, rng::key("perturb"));
    let chosen = index::sample_weighted(&mut rng, weights.len(), |i| weights[i], amount)
        .map_err(|e| Error::InvalidArgument(format!("weighted sampling: {e}")))?;
    Ok(apply(ds, &plan, chosen.into_iter(), Mechanism::Mnar, delta, seed))
}

pub fn perturb(ds: &Dataset, spec: &PerturbationSpec) -> Result<(Dataset, PerturbationReceipt)> {
    match spec.mechanism {
        Mechanism::Mcar => perturb_mcar(ds, spec.delta, spec.seed),
        Mechanism::Mnar => {
            let focus = match &spec.mnar_focus {
                Some(f) => f.clone(),
                None => modal_focus(ds),
            };
            perturb_mnar(ds, spec.delta, spec.seed, &focus)
        }
    }
}

/// Focus every categorical feature on its most frequent observed category
/// (ties to the earlier category).
pub fn modal_focus(ds: &Dataset) -> BTreeMap<String, String> {
    let schema = ds.schema();
    let mut out = BTreeMap::new();
    for j in schema.categorical_features() {
        let f = &schema.features[j];
        let mut counts = vec![0usize; f.categories().len()];
        for i in 0..ds.n_rows() {
            if let Cell::Category(c) = ds.cell(i, j) {
                counts[c as usize] += 1;
            }
        }
        if let Some(best) = argmax_first(&counts) {
            out.insert(f.name.clone(), f.categories()[best].clone());
        }
    }
    out
}

/// Focus every categorical feature that has `token` on that category.
pub fn uniform_focus(ds: &Dataset, token: &str) -> BTreeMap<String, String> {
    ds.schema()
        .features
        .iter()
        .filter(|f| f.category_index(token).is_some())
        .map(|f| (f.name.clone(), token.to_string()))
        .collect()
}

pub(crate) fn argmax_first(counts: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|b| c > counts[b]) {
            best = Some(i);
        }
    }
    best
}
