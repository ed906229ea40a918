//! The benchmark grid: split once, perturb the training half per δ, apply
//! each treatment, train each classifier under its replicate recipe and
//! report mean test error with a ±1σ band.

mod config;
mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::classify::{self, ForestParams, MlpParams, MtryRule, TrainedModel, TreeParams};
use crate::data::Dataset;
use crate::encode::{EncodedMatrix, EncoderModel};
use crate::error::{Error, Result};
use crate::impute;
use crate::perturb::{perturb, uniform_focus, Mechanism, PerturbationSpec};
use crate::rng;

pub use config::{ClassifierKind, DatasetId, ExperimentConfig, ReportFormat, Treatment, DEFAULT_SEED, MAX_REPLICATES};
pub use report::{mean_and_stdev, CellFailure, Report, RunResult, REPORT_COLUMNS};

/// Depth of each decision-tree replicate.
pub const TREE_DEPTHS: [Option<usize>; 5] = [Some(4), Some(8), Some(16), None, Some(32)];
/// Size and split rule of each forest replicate.
pub const FOREST_VARIANTS: [(usize, MtryRule); 5] = [
    (50, MtryRule::Sqrt),
    (100, MtryRule::Sqrt),
    (200, MtryRule::Sqrt),
    (100, MtryRule::Log2),
    (100, MtryRule::All),
];
/// Epoch budget of each MLP replicate relative to the configured one.
pub const MLP_EPOCH_FACTORS: [f64; 5] = [1.0, 0.8, 0.9, 1.1, 1.2];

/// Encoded train and test matrices for one (δ, treatment) pair.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: EncodedMatrix,
    pub test: EncodedMatrix,
    pub notes: Vec<String>,
}

pub fn perturb_seed(base: u64, mechanism: Mechanism, delta: f64) -> u64 {
    rng::derive(base, &format!("perturb/{}/{delta}", mechanism.name()))
}

pub fn impute_seed(base: u64, treatment: Treatment, mechanism: Mechanism, delta: f64) -> u64 {
    rng::derive(base, &format!("impute/{treatment}/{}/{delta}", mechanism.name()))
}

pub fn cell_seed(base: u64, classifier: ClassifierKind, treatment: Treatment, mechanism: Mechanism, delta: f64) -> u64 {
    rng::derive(
        base,
        &format!("cell/{}/{treatment}/{}/{delta}", classifier.name(), mechanism.name()),
    )
}

/// MNAR focus: the configured map, else "y" on every vote for CVRs, else
/// each feature's mode.
pub fn default_focus(cfg: &ExperimentConfig, train: &Dataset) -> Option<BTreeMap<String, String>> {
    match (&cfg.mnar_focus, cfg.dataset) {
        (Some(f), _) => Some(f.clone()),
        (None, DatasetId::Cvrs) => Some(uniform_focus(train, "y")),
        (None, _) => None,
    }
}

/// The training half with missingness raised to δ; unchanged when δ = 0.
pub fn perturb_train(cfg: &ExperimentConfig, train: &Dataset, delta: f64) -> Result<Dataset> {
    if delta == 0.0 {
        return Ok(train.clone());
    }
    let spec = PerturbationSpec {
        mechanism: cfg.mechanism,
        delta,
        seed: perturb_seed(cfg.seed, cfg.mechanism, delta),
        mnar_focus: default_focus(cfg, train),
    };
    Ok(perturb(train, &spec)?.0)
}

/// Apply a treatment. Imputers and encoders are fitted on `train` only.
pub fn prepare(train: &Dataset, test: &Dataset, treatment: Treatment, seed: u64) -> Result<Prepared> {
    match treatment {
        Treatment::OneHot => {
            let enc = EncoderModel::fit(train)?;
            Ok(Prepared {
                train: enc.encode(train)?,
                test: enc.encode(test)?,
                notes: enc.notes().to_vec(),
            })
        }
        Treatment::Impute(method) => {
            let imp = impute::fit(method, train, seed)?;
            let train = imp.transform(train)?;
            let test = imp.transform(test)?;
            let enc = EncoderModel::fit(&train)?;
            let mut notes = imp.notes().to_vec();
            notes.extend_from_slice(enc.notes());
            Ok(Prepared {
                train: enc.encode(&train)?,
                test: enc.encode(&test)?,
                notes,
            })
        }
    }
}

fn replicate_seed(cell: u64, r: usize) -> u64 {
    rng::derive(cell, &format!("replicate/{r}"))
}

fn best_mlp(cfg: &ExperimentConfig, train: &EncodedMatrix, seed: u64) -> Result<MlpParams> {
    let base = MlpParams {
        seed: rng::derive(seed, "search"),
        ..cfg.mlp.clone()
    };
    match &cfg.mlp_search {
        None => Ok(cfg.mlp.clone()),
        Some(grid) => {
            let points = grid.expand(&base);
            let outcome = classify::grid_search(&points, train, |p, x| classify::fit_mlp(x, p))?;
            info!("mlp search picked point {} of {}", outcome.best_index, points.len());
            Ok(outcome.best)
        }
    }
}

/// Replicate models of one cell, in recipe order.
pub fn replicate_models(
    cfg: &ExperimentConfig,
    classifier: ClassifierKind,
    train: &EncodedMatrix,
    seed: u64,
) -> Result<Vec<TrainedModel>> {
    let r = cfg.replicates;
    match classifier {
        ClassifierKind::DecisionTree => TREE_DEPTHS[..r]
            .iter()
            .map(|&max_depth| {
                classify::fit_decision_tree(
                    train,
                    &TreeParams {
                        max_depth,
                        ..cfg.tree
                    },
                )
            })
            .collect(),
        ClassifierKind::RandomForest => FOREST_VARIANTS[..r]
            .iter()
            .enumerate()
            .map(|(i, &(n_trees, mtry))| {
                classify::fit_random_forest(
                    train,
                    &ForestParams {
                        n_trees,
                        mtry,
                        seed: replicate_seed(seed, i),
                        ..cfg.forest
                    },
                )
            })
            .collect(),
        ClassifierKind::Mlp => {
            let params = best_mlp(cfg, train, seed)?;
            MLP_EPOCH_FACTORS[..r]
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let epochs = ((params.epochs as f64 * f).round() as usize).max(1);
                    classify::fit_mlp(
                        train,
                        &MlpParams {
                            epochs,
                            seed: replicate_seed(seed, i),
                            ..params.clone()
                        },
                    )
                })
                .collect()
        }
    }
}

/// Test error of every replicate of one cell.
pub fn run_cell(cfg: &ExperimentConfig, classifier: ClassifierKind, prepared: &Prepared, seed: u64) -> Result<Vec<f64>> {
    replicate_models(cfg, classifier, &prepared.train, seed)?
        .iter()
        .map(|m| m.error_on(&prepared.test))
        .collect()
}

pub fn run_grid(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    run_grid_on(cfg, &ds)
}

/// Run every cell on an already loaded dataset. Stage failures are recorded
/// per cell; only configuration and split errors abort the whole grid.
pub fn run_grid_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.validate()?;
    let treatments = cfg.parsed_treatments()?;
    let (train, test) = cfg.split(ds)?;
    info!(
        "{}: {} train / {} test rows, {} cells",
        cfg.dataset.name(),
        train.n_rows(),
        test.n_rows(),
        cfg.classifiers.len() * treatments.len() * cfg.deltas.len()
    );
    let groups: Vec<(usize, usize)> = (0..cfg.deltas.len())
        .flat_map(|d| (0..treatments.len()).map(move |t| (d, t)))
        .collect();
    let run_group = |&(d, t): &(usize, usize)| -> Vec<std::result::Result<RunResult, String>> {
        let delta = cfg.deltas[d];
        let treatment = treatments[t];
        let prepared = perturb_train(cfg, &train, delta).and_then(|p| {
            prepare(&p, &test, treatment, impute_seed(cfg.seed, treatment, cfg.mechanism, delta))
        });
        let prepared = match prepared {
            Ok(p) => p,
            Err(e) => return vec![Err(e.to_string()); cfg.classifiers.len()],
        };
        for n in &prepared.notes {
            warn!("{treatment} at delta {delta}: {n}");
        }
        cfg.classifiers
            .iter()
            .map(|&c| {
                let start = Instant::now();
                let seed = cell_seed(cfg.seed, c, treatment, cfg.mechanism, delta);
                let errors = run_cell(cfg, c, &prepared, seed).map_err(|e| e.to_string())?;
                let (error, stdev) = mean_and_stdev(&errors);
                info!("{} {treatment} delta={delta}: {error:.4} ± {stdev:.4}", c.name());
                Ok(RunResult {
                    dataset: cfg.dataset.name().to_string(),
                    classifier: c.name().to_string(),
                    treatment: treatment.name().to_string(),
                    mechanism: cfg.mechanism,
                    delta,
                    error,
                    stdev,
                    replicates: errors,
                    seconds: if cfg.record_timings {
                        start.elapsed().as_secs_f64()
                    } else {
                        0.0
                    },
                })
            })
            .collect()
    };
    let outcomes: Vec<_> = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(|| groups.par_iter().map(run_group).collect()),
        None => groups.par_iter().map(run_group).collect(),
    };
    // report order: classifier, then treatment, then delta
    let mut report = Report::default();
    for (c, &classifier) in cfg.classifiers.iter().enumerate() {
        for (t, &treatment) in treatments.iter().enumerate() {
            for (d, &delta) in cfg.deltas.iter().enumerate() {
                match &outcomes[d * treatments.len() + t][c] {
                    Ok(r) => report.results.push(r.clone()),
                    Err(message) => report.failures.push(CellFailure {
                        classifier: classifier.name().to_string(),
                        treatment: treatment.name().to_string(),
                        delta,
                        message: message.clone(),
                    }),
                }
            }
        }
    }
    Ok(report)
}
