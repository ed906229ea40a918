use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Cell, Dataset, FeatureKind, FeatureSchema, Schema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Categorical,
    Continuous,
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "categorical" | "cat" | "k" => Ok(ColumnKind::Categorical),
            "continuous" | "num" | "c" => Ok(ColumnKind::Continuous),
            other => Err(Error::InvalidArgument(format!("unknown column kind {other:?}"))),
        }
    }
}

/// How to read a UCI comma-separated file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    pub missing_symbol: String,
    /// Kind of every column, label column included (its entry is ignored).
    pub kinds: Vec<ColumnKind>,
    pub label_column: usize,
    /// Column names, label column included. Defaults to `x0, x1, ...`.
    pub names: Option<Vec<String>>,
    /// Suffix removed from labels (`adult.test` writes `>50K.`).
    pub strip_label_suffix: Option<String>,
    /// Lines starting with this byte are skipped.
    pub comment: Option<u8>,
}

impl LoadOptions {
    pub fn new(kinds: Vec<ColumnKind>, label_column: usize) -> Self {
        Self {
            missing_symbol: "?".into(),
            kinds,
            label_column,
            names: None,
            strip_label_suffix: None,
            comment: Some(b'|'),
        }
    }
}

const ADULT_COLUMNS: [(&str, ColumnKind); 15] = [
    ("age", ColumnKind::Continuous),
    ("workclass", ColumnKind::Categorical),
    ("fnlwgt", ColumnKind::Continuous),
    ("education", ColumnKind::Categorical),
    ("education-num", ColumnKind::Continuous),
    ("marital-status", ColumnKind::Categorical),
    ("occupation", ColumnKind::Categorical),
    ("relationship", ColumnKind::Categorical),
    ("race", ColumnKind::Categorical),
    ("sex", ColumnKind::Categorical),
    ("capital-gain", ColumnKind::Continuous),
    ("capital-loss", ColumnKind::Continuous),
    ("hours-per-week", ColumnKind::Continuous),
    ("native-country", ColumnKind::Categorical),
    ("income", ColumnKind::Categorical),
];

const CVRS_COLUMNS: [&str; 17] = [
    "party",
    "handicapped-infants",
    "water-project-cost-sharing",
    "adoption-of-the-budget-resolution",
    "physician-fee-freeze",
    "el-salvador-aid",
    "religious-groups-in-schools",
    "anti-satellite-test-ban",
    "aid-to-nicaraguan-contras",
    "mx-missile",
    "immigration",
    "synfuels-corporation-cutback",
    "education-spending",
    "superfund-right-to-sue",
    "crime",
    "duty-free-exports",
    "export-administration-act-south-africa",
];

/// Column layouts of the two UCI benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Adult,
    Cvrs,
}

impl Preset {
    pub fn options(self) -> LoadOptions {
        match self {
            Preset::Adult => LoadOptions {
                names: Some(ADULT_COLUMNS.iter().map(|(n, _)| n.to_string()).collect()),
                strip_label_suffix: Some(".".into()),
                ..LoadOptions::new(ADULT_COLUMNS.iter().map(|(_, k)| *k).collect(), 14)
            },
            Preset::Cvrs => LoadOptions {
                names: Some(CVRS_COLUMNS.iter().map(|n| n.to_string()).collect()),
                ..LoadOptions::new(vec![ColumnKind::Categorical; 17], 0)
            },
        }
    }

    /// UCI file names, in concatenation order.
    pub fn file_names(self) -> &'static [&'static str] {
        match self {
            Preset::Adult => &["adult.data", "adult.test"],
            Preset::Cvrs => &["house-votes-84.data"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Adult => "adult",
            Preset::Cvrs => "cvrs",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adult" => Ok(Preset::Adult),
            "cvrs" | "votes" | "house-votes" => Ok(Preset::Cvrs),
            other => Err(Error::InvalidArgument(format!("unknown dataset preset {other:?}"))),
        }
    }
}

/// Load one UCI file.
pub fn load_uci(path: &Path, options: &LoadOptions) -> Result<Dataset> {
    load_uci_files(&[path.to_path_buf()], options)
}

/// Load and concatenate several UCI files sharing one layout. Category
/// vocabularies are collected in first-seen order across all files.
pub fn load_uci_files(paths: &[PathBuf], options: &LoadOptions) -> Result<Dataset> {
    let width = options.kinds.len();
    if options.label_column >= width {
        return Err(Error::InvalidArgument(format!(
            "label column {} outside {width} columns",
            options.label_column
        )));
    }
    if let Some(names) = &options.names {
        if names.len() != width {
            return Err(Error::InvalidArgument(format!(
                "{} column names for {width} columns",
                names.len()
            )));
        }
    }
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no input files".into()));
    }
    let name_of = |c: usize| match &options.names {
        Some(n) => n[c].clone(),
        None => format!("x{c}"),
    };
    let feature_columns: Vec<usize> = (0..width).filter(|&c| c != options.label_column).collect();
    let mut features: Vec<FeatureSchema> = feature_columns
        .iter()
        .map(|&c| match options.kinds[c] {
            ColumnKind::Categorical => FeatureSchema::categorical(name_of(c), Vec::new()),
            ColumnKind::Continuous => FeatureSchema::continuous(name_of(c)),
        })
        .collect();
    let mut classes: Vec<String> = Vec::new();
    let mut cells = Vec::new();
    let mut labels = Vec::new();

    for path in paths {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(options.comment)
            .from_reader(std::io::BufReader::new(file));
        for record in reader.records() {
            let record = record.map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
                _ => Error::Csv(e),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            if record.len() != width {
                return Err(Error::RowWidth {
                    path: path.clone(),
                    line,
                    expected: width,
                    found: record.len(),
                });
            }
            for (j, &c) in feature_columns.iter().enumerate() {
                let token = &record[c];
                if token == options.missing_symbol {
                    features[j].had_missing = true;
                    cells.push(Cell::Missing);
                    continue;
                }
                match &mut features[j].kind {
                    FeatureKind::Categorical { categories } => {
                        let idx = match categories.iter().position(|t| t == token) {
                            Some(i) => i,
                            None => {
                                categories.push(token.to_string());
                                categories.len() - 1
                            }
                        };
                        cells.push(Cell::Category(idx as u32));
                    }
                    FeatureKind::Continuous => match token.parse::<f64>() {
                        Ok(v) if v.is_finite() => cells.push(Cell::Value(v)),
                        _ => {
                            return Err(Error::BadNumber {
                                path: path.clone(),
                                line,
                                column: c,
                                token: token.to_string(),
                            })
                        }
                    },
                }
            }
            let mut label = &record[options.label_column];
            if let Some(suffix) = &options.strip_label_suffix {
                label = label.strip_suffix(suffix.as_str()).unwrap_or(label).trim_end();
            }
            if label == options.missing_symbol || label.is_empty() {
                return Err(Error::MissingLabel {
                    path: path.clone(),
                    line,
                });
            }
            let idx = match classes.iter().position(|c| c == label) {
                Some(i) => i,
                None => {
                    classes.push(label.to_string());
                    classes.len() - 1
                }
            };
            labels.push(idx as u32);
        }
    }

    let schema = Schema {
        features,
        label_name: name_of(options.label_column),
        classes,
    };
    let n = labels.len();
    Dataset::new(Arc::new(schema), cells, labels, (0..n).collect())
}
