//! Mixed-type tabular datasets with missing cells.
//!
//! A [`Dataset`] is an `n x K` grid of [`Cell`]s plus a label per row. The
//! [`Schema`] is shared (behind an `Arc`) by every dataset derived from the
//! same source, so category indices mean the same thing in train and test
//! partitions.

mod format;
mod load;
mod pattern;
mod split;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{read_dataset, read_dataset_file, write_dataset, write_dataset_file, FORMAT_MAGIC};
pub use load::{load_uci, load_uci_files, ColumnKind, LoadOptions, Preset};
pub use pattern::{feature_association, missing_pattern_summary, AssociationMatrix, PatternReport};
pub use split::{split, split_stratified};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical { categories: Vec<String> },
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
    /// Whether the source data had any missing cell in this feature.
    #[serde(default)]
    pub had_missing: bool,
}

impl FeatureSchema {
    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical { categories },
            had_missing: false,
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Continuous,
            had_missing: false,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    /// Category tokens; empty for continuous features.
    pub fn categories(&self) -> &[String] {
        match &self.kind {
            FeatureKind::Categorical { categories } => categories,
            FeatureKind::Continuous => &[],
        }
    }

    pub fn category_index(&self, token: &str) -> Option<usize> {
        self.categories().iter().position(|c| c == token)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureSchema>,
    pub label_name: String,
    pub classes: Vec<String>,
}

impl Schema {
    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("no features".into()));
        }
        let mut names = HashSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name {:?}", f.name)));
            }
            let mut seen = HashSet::new();
            for c in f.categories() {
                if !seen.insert(c.as_str()) {
                    return Err(Error::Schema(format!(
                        "feature {:?}: duplicate category {c:?}",
                        f.name
                    )));
                }
            }
        }
        let mut seen = HashSet::new();
        for c in &self.classes {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!("duplicate class {c:?}")));
            }
        }
        Ok(())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn categorical_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_categorical())
            .map(|(j, _)| j)
    }
}

/// One value of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Missing,
    /// Index into the feature's category list.
    Category(u32),
    Value(f64),
}

impl Cell {
    pub fn is_missing(self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// Binary missingness indicator aligned with a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    n_rows: usize,
    n_cols: usize,
    bits: Vec<bool>,
}

impl MissingMask {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.n_cols + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    pub fn column_count(&self, col: usize) -> usize {
        (0..self.n_rows).filter(|&i| self.get(i, col)).count()
    }

    /// Elementwise `self >= other`.
    pub fn covers(&self, other: &MissingMask) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a || !b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    cells: Vec<Cell>,
    labels: Vec<u32>,
    row_ids: Vec<usize>,
}

impl Dataset {
    /// Build a dataset from row-major cells, checking every cell against
    /// the schema.
    pub fn new(
        schema: Arc<Schema>,
        cells: Vec<Cell>,
        labels: Vec<u32>,
        row_ids: Vec<usize>,
    ) -> Result<Self> {
        schema.validate()?;
        let k = schema.features.len();
        let n = labels.len();
        if n == 0 {
            return Err(Error::Schema("dataset has no rows".into()));
        }
        if cells.len() != n * k {
            return Err(Error::Schema(format!(
                "{} cells for {n} rows of {k} features",
                cells.len()
            )));
        }
        if row_ids.len() != n {
            return Err(Error::Schema("row id count differs from row count".into()));
        }
        for (idx, cell) in cells.iter().enumerate() {
            let feature = &schema.features[idx % k];
            match (cell, &feature.kind) {
                (Cell::Missing, _) => {}
                (Cell::Category(c), FeatureKind::Categorical { categories })
                    if (*c as usize) < categories.len() => {}
                (Cell::Value(v), FeatureKind::Continuous) if v.is_finite() => {}
                _ => {
                    return Err(Error::Schema(format!(
                        "row {}: cell {:?} does not fit feature {:?}",
                        idx / k,
                        cell,
                        feature.name
                    )))
                }
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= schema.classes.len()) {
            return Err(Error::Schema(format!("label index {bad} out of range")));
        }
        Ok(Self {
            schema,
            cells,
            labels,
            row_ids,
        })
    }

    /// Same schema and provenance, new cells. Used by transformations that
    /// never change row order.
    pub(crate) fn with_cells(&self, cells: Vec<Cell>) -> Self {
        debug_assert_eq!(cells.len(), self.cells.len());
        Self {
            schema: Arc::clone(&self.schema),
            cells,
            labels: self.labels.clone(),
            row_ids: self.row_ids.clone(),
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.features.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.n_features() + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let k = self.n_features();
        &self.cells[row * k..(row + 1) * k]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Original row index of every row, in the source file's numbering.
    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn mask(&self) -> MissingMask {
        MissingMask {
            n_rows: self.n_rows(),
            n_cols: self.n_features(),
            bits: self.cells.iter().map(|c| c.is_missing()).collect(),
        }
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    pub fn row_is_complete(&self, row: usize) -> bool {
        self.row(row).iter().all(|c| !c.is_missing())
    }

    /// Rows at the given positions, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let k = self.n_features();
        let mut cells = Vec::with_capacity(rows.len() * k);
        let mut labels = Vec::with_capacity(rows.len());
        let mut row_ids = Vec::with_capacity(rows.len());
        for &i in rows {
            cells.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            row_ids.push(self.row_ids[i]);
        }
        Self::new(Arc::clone(&self.schema), cells, labels, row_ids)
    }

    /// Drop every row that has a missing cell. Row provenance is kept.
    pub fn complete_cases(&self) -> Result<Self> {
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&i| self.row_is_complete(i))
            .collect();
        if rows.is_empty() {
            return Err(Error::NoCompleteCases);
        }
        self.select_rows(&rows)
    }

    /// Missing fraction over categorical cells only, with the raw counts.
    pub fn categorical_missing(&self) -> (usize, usize) {
        let cats: Vec<usize> = self.schema.categorical_features().collect();
        let total = cats.len() * self.n_rows();
        let missing = (0..self.n_rows())
            .map(|i| cats.iter().filter(|&&j| self.cell(i, j).is_missing()).count())
            .sum();
        (missing, total)
    }

    /// Render a cell as its source token.
    pub fn token(&self, row: usize, col: usize, missing_symbol: &str) -> String {
        match self.cell(row, col) {
            Cell::Missing => missing_symbol.to_string(),
            Cell::Category(c) => self.schema.features[col].categories()[c as usize].clone(),
            Cell::Value(v) => format!("{v}"),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::toy;
    use super::*;

    #[test]
    fn mask_tracks_missing_cells() {
        let ds = toy(&[true, false], &[&["a", "1"], &["?", "2"], &["b", "?"]], &["x", "y", "x"]);
        let m = ds.mask();
        assert!(!m.get(0, 0) && m.get(1, 0) && m.get(2, 1));
        assert_eq!(m.count(), 2);
        assert!((m.fraction() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn complete_cases_keeps_order_and_provenance() {
        let ds = toy(&[true], &[&["a"], &["?"], &["b"]], &["x", "y", "x"]);
        let cc = ds.complete_cases().unwrap();
        assert_eq!(cc.n_rows(), 2);
        assert_eq!(cc.row_ids(), &[0, 2]);
        let full = toy(&[true], &[&["a"], &["b"]], &["x", "y"]);
        assert_eq!(full.complete_cases().unwrap(), full);
    }

    #[test]
    fn complete_cases_two_row_toy() {
        let ds = toy(&[true, true], &[&["a", "?"], &["b", "c"]], &["x", "y"]);
        assert_eq!(ds.complete_cases().unwrap().n_rows(), 1);
    }

    #[test]
    fn complete_cases_empty_is_an_error() {
        let ds = toy(&[true], &[&["?"]], &["x"]);
        assert!(matches!(ds.complete_cases(), Err(Error::NoCompleteCases)));
    }

    #[test]
    fn constructor_rejects_kind_mismatch() {
        let ds = toy(&[true], &[&["a"]], &["x"]);
        let bad = Dataset::new(
            Arc::clone(ds.schema()),
            vec![Cell::Value(1.0)],
            vec![0],
            vec![0],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn schema_rejects_duplicate_names() {
        let s = Schema {
            features: vec![FeatureSchema::continuous("a"), FeatureSchema::continuous("a")],
            label_name: "y".into(),
            classes: vec!["0".into()],
        };
        assert!(s.validate().is_err());
    }
}
