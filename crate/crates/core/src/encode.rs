//! One-hot encoding with missing-as-category and train-statistic
//! standardization.
//!
//! A fitted [`EncoderModel`] is applied unchanged to train and test, so both
//! matrices share width and column meaning. A categorical feature gets a
//! MISSING column when the source data or the fitting set had a missing cell
//! in it; a continuous feature gets a missing indicator under the same rule.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Dataset, FeatureKind, Schema};
use crate::error::{Error, Result};

/// Standard deviations below this encode the feature as constant 0.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Block {
    Categorical {
        feature: usize,
        offset: usize,
        n_categories: usize,
        missing_column: Option<usize>,
    },
    Continuous {
        feature: usize,
        offset: usize,
        mean: f64,
        std: f64,
        degenerate: bool,
        indicator: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "meaning", rename_all = "snake_case")]
pub enum ColumnMeaning {
    Category { category: String },
    Missing,
    Value,
    Indicator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnProvenance {
    pub column: usize,
    pub feature: String,
    #[serde(flatten)]
    pub meaning: ColumnMeaning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    schema: Arc<Schema>,
    blocks: Vec<Block>,
    width: usize,
    notes: Vec<String>,
}

/// Dense classifier input.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub features: Array2<f64>,
    pub labels: Vec<u32>,
    pub n_classes: usize,
    pub provenance: Vec<ColumnProvenance>,
}

impl EncodedMatrix {
    pub fn new(features: Array2<f64>, labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l as usize >= n_classes) {
            return Err(Error::InvalidArgument("label outside class range".into()));
        }
        Ok(Self {
            provenance: (0..features.ncols())
                .map(|c| ColumnProvenance {
                    column: c,
                    feature: format!("x{c}"),
                    meaning: ColumnMeaning::Value,
                })
                .collect(),
            features,
            labels,
            n_classes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn width(&self) -> usize {
        self.features.ncols()
    }

    /// Headerless numeric CSV of the feature block.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.features.rows() {
            w.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    /// CSV at `path` plus a `<path>.provenance.json` sidecar.
    pub fn export(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".provenance.json");
        let json = serde_json::to_string_pretty(&self.provenance)?;
        std::fs::write(&sidecar, json).map_err(|e| Error::io(sidecar, e))?;
        Ok(())
    }
}

fn column_has_missing(ds: &Dataset, j: usize) -> bool {
    (0..ds.n_rows()).any(|i| ds.cell(i, j).is_missing())
}

impl EncoderModel {
    pub fn fit(train: &Dataset) -> Result<Self> {
        Self::fit_excluding(train, &[])
    }

    /// Fit on every feature except those listed.
    pub fn fit_excluding(train: &Dataset, exclude: &[usize]) -> Result<Self> {
        let schema = Arc::clone(train.schema());
        let mut blocks = Vec::new();
        let mut notes = Vec::new();
        let mut offset = 0;
        for (j, f) in schema.features.iter().enumerate() {
            if exclude.contains(&j) {
                continue;
            }
            let needs_missing = f.had_missing || column_has_missing(train, j);
            match &f.kind {
                FeatureKind::Categorical { categories } => {
                    let n_categories = categories.len();
                    let missing_column = needs_missing.then_some(offset + n_categories);
                    blocks.push(Block::Categorical {
                        feature: j,
                        offset,
                        n_categories,
                        missing_column,
                    });
                    offset += n_categories + usize::from(needs_missing);
                }
                FeatureKind::Continuous => {
                    let observed: Vec<f64> = (0..train.n_rows())
                        .filter_map(|i| match train.cell(i, j) {
                            Cell::Value(v) => Some(v),
                            _ => None,
                        })
                        .collect();
                    if observed.is_empty() {
                        return Err(Error::feature(&f.name, "no observed values in training data"));
                    }
                    let n = observed.len() as f64;
                    let mean = observed.iter().sum::<f64>() / n;
                    let std = if observed.len() > 1 {
                        (observed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
                            .sqrt()
                    } else {
                        0.0
                    };
                    let degenerate = std < DEGENERATE_STD;
                    if degenerate {
                        notes.push(format!("feature {:?} is constant in training data; encoded as 0", f.name));
                    }
                    let indicator = needs_missing.then_some(offset + 1);
                    blocks.push(Block::Continuous {
                        feature: j,
                        offset,
                        mean,
                        std,
                        degenerate,
                        indicator,
                    });
                    offset += 1 + usize::from(needs_missing);
                }
            }
        }
        Ok(Self {
            schema,
            blocks,
            width: offset,
            notes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Train mean and standard deviation of a continuous feature.
    pub fn standardization(&self, feature: usize) -> Option<(f64, f64)> {
        self.blocks.iter().find_map(|b| match *b {
            Block::Continuous {
                feature: f,
                mean,
                std,
                ..
            } if f == feature => Some((mean, std)),
            _ => None,
        })
    }

    pub fn encode(&self, ds: &Dataset) -> Result<EncodedMatrix> {
        if ds.schema().features != self.schema.features {
            return Err(Error::Schema("dataset schema differs from the encoder's".into()));
        }
        let mut x = Array2::<f64>::zeros((ds.n_rows(), self.width));
        for (i, mut out) in x.rows_mut().into_iter().enumerate() {
            for block in &self.blocks {
                match *block {
                    Block::Categorical {
                        feature,
                        offset,
                        n_categories,
                        missing_column,
                    } => {
                        let col = match ds.cell(i, feature) {
                            Cell::Category(c) if (c as usize) < n_categories => offset + c as usize,
                            Cell::Missing if missing_column.is_some() => missing_column.unwrap(),
                            Cell::Missing => {
                                return Err(Error::UnknownCategory {
                                    feature: self.schema.features[feature].name.clone(),
                                    index: n_categories,
                                })
                            }
                            Cell::Category(c) => {
                                return Err(Error::UnknownCategory {
                                    feature: self.schema.features[feature].name.clone(),
                                    index: c as usize,
                                })
                            }
                            Cell::Value(_) => unreachable!("schema checked at construction"),
                        };
                        out[col] = 1.0;
                    }
                    Block::Continuous {
                        feature,
                        offset,
                        mean,
                        std,
                        degenerate,
                        indicator,
                    } => match ds.cell(i, feature) {
                        Cell::Value(v) => {
                            out[offset] = if degenerate { 0.0 } else { (v - mean) / std };
                        }
                        Cell::Missing => match indicator {
                            Some(ind) => out[ind] = 1.0,
                            None => {
                                return Err(Error::feature(
                                    &self.schema.features[feature].name,
                                    "missing value but encoder has no indicator column",
                                ))
                            }
                        },
                        Cell::Category(_) => unreachable!("schema checked at construction"),
                    },
                }
            }
        }
        Ok(EncodedMatrix {
            features: x,
            labels: ds.labels().to_vec(),
            n_classes: self.schema.classes.len(),
            provenance: self.provenance(),
        })
    }

    /// Source feature and meaning of every encoded column, in column order.
    pub fn provenance(&self) -> Vec<ColumnProvenance> {
        let mut out = Vec::with_capacity(self.width);
        for block in &self.blocks {
            match *block {
                Block::Categorical {
                    feature,
                    offset,
                    missing_column,
                    ..
                } => {
                    let f = &self.schema.features[feature];
                    for (c, token) in f.categories().iter().enumerate() {
                        out.push(ColumnProvenance {
                            column: offset + c,
                            feature: f.name.clone(),
                            meaning: ColumnMeaning::Category {
                                category: token.clone(),
                            },
                        });
                    }
                    if let Some(col) = missing_column {
                        out.push(ColumnProvenance {
                            column: col,
                            feature: f.name.clone(),
                            meaning: ColumnMeaning::Missing,
                        });
                    }
                }
                Block::Continuous {
                    feature,
                    offset,
                    indicator,
                    ..
                } => {
                    let name = &self.schema.features[feature].name;
                    out.push(ColumnProvenance {
                        column: offset,
                        feature: name.clone(),
                        meaning: ColumnMeaning::Value,
                    });
                    if let Some(col) = indicator {
                        out.push(ColumnProvenance {
                            column: col,
                            feature: name.clone(),
                            meaning: ColumnMeaning::Indicator,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Fit on `train` and encode it.
pub fn fit_encoder(train: &Dataset) -> Result<EncoderModel> {
    EncoderModel::fit(train)
}

pub fn decode_column_provenance(model: &EncoderModel) -> Vec<ColumnProvenance> {
    model.provenance()
}
