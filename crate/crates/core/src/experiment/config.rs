use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{ForestParams, MlpGrid, MlpParams, TreeParams};
use crate::data::{load_uci_files, read_dataset_file, split, split_stratified, Dataset, Preset};
use crate::error::{Error, Result};
use crate::impute::{ImputeMethod, DEFAULT_K};
use crate::perturb::{validate_delta, Mechanism};

pub const DEFAULT_SEED: u64 = 42;
pub const MAX_REPLICATES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetId {
    Adult,
    Cvrs,
    /// A file in the native dataset format.
    Custom,
}

impl DatasetId {
    pub fn name(self) -> &'static str {
        match self {
            DatasetId::Adult => "adult",
            DatasetId::Cvrs => "cvrs",
            DatasetId::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree,
    RandomForest,
    Mlp,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decision_tree" | "tree" => Ok(ClassifierKind::DecisionTree),
            "random_forest" | "forest" => Ok(ClassifierKind::RandomForest),
            "mlp" => Ok(ClassifierKind::Mlp),
            other => Err(Error::InvalidArgument(format!("unknown classifier {other:?}"))),
        }
    }
}

/// One-hot encoding of the perturbed data, or imputation followed by
/// encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Treatment {
    OneHot,
    Impute(ImputeMethod),
}

impl Treatment {
    pub fn name(&self) -> &'static str {
        match self {
            Treatment::OneHot => "one_hot",
            Treatment::Impute(m) => m.name(),
        }
    }

    /// The seven treatments of the benchmark grid.
    pub fn all(knn_k: usize) -> Vec<Treatment> {
        ["one_hot", "mode", "random_replacement", "knn", "model_logistic", "model_random_forest", "model_svm"]
            .iter()
            .map(|s| Treatment::parse(s, knn_k).expect("known name"))
            .collect()
    }

    pub fn parse(s: &str, knn_k: usize) -> Result<Self> {
        if s == "one_hot" {
            return Ok(Treatment::OneHot);
        }
        Ok(Treatment::Impute(s.parse::<ImputeMethod>()?.with_k(knn_k)))
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_replicates() -> usize {
    MAX_REPLICATES
}
fn default_fraction() -> f64 {
    2.0 / 3.0
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_deltas() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4]
}

/// A benchmark grid as read from JSON. Relative paths are resolved against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetId,
    /// Source files. For `adult`/`cvrs` the defaults are the UCI file names
    /// inside `data_dir`.
    #[serde(default)]
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    pub treatments: Vec<String>,
    #[serde(default = "default_k")]
    pub knn_k: usize,
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub mechanism: Mechanism,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub stratified: bool,
    #[serde(default)]
    pub mnar_focus: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub mlp: MlpParams,
    #[serde(default)]
    pub mlp_search: Option<MlpGrid>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Off by default so reruns produce identical reports.
    #[serde(default)]
    pub record_timings: bool,
}

impl ExperimentConfig {
    /// The full benchmark grid on a dataset: every classifier, every
    /// treatment, δ ∈ {0, 0.1, 0.2, 0.3, 0.4}.
    pub fn full_grid(dataset: DatasetId) -> Self {
        Self {
            dataset,
            paths: Vec::new(),
            data_dir: None,
            treatments: Treatment::all(DEFAULT_K).iter().map(|t| t.name().to_string()).collect(),
            knn_k: DEFAULT_K,
            classifiers: vec![ClassifierKind::DecisionTree, ClassifierKind::RandomForest, ClassifierKind::Mlp],
            deltas: default_deltas(),
            mechanism: Mechanism::Mcar,
            seed: DEFAULT_SEED,
            replicates: MAX_REPLICATES,
            train_fraction: default_fraction(),
            stratified: false,
            mnar_focus: None,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            mlp: MlpParams::default(),
            mlp_search: None,
            output: None,
            format: ReportFormat::Csv,
            jobs: None,
            record_timings: false,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.paths.iter_mut().for_each(fix);
        if let Some(d) = self.data_dir.as_mut() {
            fix(d);
        }
        if let Some(o) = self.output.as_mut() {
            fix(o);
        }
    }

    pub fn parsed_treatments(&self) -> Result<Vec<Treatment>> {
        self.treatments.iter().map(|t| Treatment::parse(t, self.knn_k)).collect()
    }

    /// Check every axis before any work is done.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.treatments.is_empty() || self.classifiers.is_empty() || self.deltas.is_empty() {
            return bad("treatments, classifiers and deltas must be non-empty".into());
        }
        let treatments = self.parsed_treatments().map_err(|e| Error::Config(e.to_string()))?;
        if self.knn_k == 0 {
            return bad("knn_k must be at least 1".into());
        }
        for (i, t) in treatments.iter().enumerate() {
            if treatments[..i].contains(t) {
                return bad(format!("treatment {t} listed twice"));
            }
        }
        for (i, c) in self.classifiers.iter().enumerate() {
            if self.classifiers[..i].contains(c) {
                return bad(format!("classifier {} listed twice", c.name()));
            }
        }
        for (i, &d) in self.deltas.iter().enumerate() {
            validate_delta(d).map_err(|e| Error::Config(e.to_string()))?;
            if self.deltas[..i].contains(&d) {
                return bad(format!("delta {d} listed twice"));
            }
        }
        if !(1..=MAX_REPLICATES).contains(&self.replicates) {
            return bad(format!("replicates must be between 1 and {MAX_REPLICATES}"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must be in (0, 1)".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if self.dataset == DatasetId::Custom && self.paths.len() != 1 {
            return bad("a custom dataset needs exactly one path".into());
        }
        self.mlp.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(g) = &self.mlp_search {
            if g.is_empty() {
                return bad("mlp_search has an empty axis".into());
            }
        }
        Ok(())
    }

    fn source_files(&self) -> Vec<PathBuf> {
        if !self.paths.is_empty() {
            return self.paths.clone();
        }
        let dir = self.data_dir.clone().unwrap_or_else(|| PathBuf::from("data"));
        let preset = match self.dataset {
            DatasetId::Adult => Preset::Adult,
            DatasetId::Cvrs => Preset::Cvrs,
            DatasetId::Custom => return Vec::new(),
        };
        preset.file_names().iter().map(|f| dir.join(f)).collect()
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let files = self.source_files();
        match self.dataset {
            DatasetId::Adult => load_uci_files(&files, &Preset::Adult.options()),
            DatasetId::Cvrs => load_uci_files(&files, &Preset::Cvrs.options()),
            DatasetId::Custom => read_dataset_file(&files[0]),
        }
    }

    /// Train/test partition shared by every cell of the grid.
    pub fn split(&self, ds: &Dataset) -> Result<(Dataset, Dataset)> {
        if self.stratified {
            split_stratified(ds, self.train_fraction, self.seed)
        } else {
            split(ds, self.train_fraction, self.seed)
        }
    }
}
