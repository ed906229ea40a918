use serde::{Deserialize, Serialize};

use super::{Cell, Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Pairwise association between features. Categorical pairs carry
/// Cramér's V, continuous pairs Pearson's r, mixed pairs `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationMatrix {
    pub features: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    /// Set where one side was constant on the pairwise-complete rows.
    pub degenerate: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub n_rows: usize,
    pub n_features: usize,
    pub features: Vec<String>,
    pub missing_fraction: f64,
    /// Column means of the mask.
    pub feature_missing_fraction: Vec<f64>,
    /// Share of all missing cells that fall in each feature.
    pub missing_cell_share: Vec<f64>,
    /// Share of rows with at least one missing cell.
    pub incomplete_row_fraction: f64,
    /// Entry `c` counts rows with exactly `c` missing cells.
    pub row_missing_histogram: Vec<usize>,
    /// Share of rows missing in both features.
    pub co_missing: Vec<Vec<f64>>,
    pub association: Option<AssociationMatrix>,
}

impl PatternReport {
    pub fn co_missing_by_name(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.features.iter().position(|f| f == a)?;
        let j = self.features.iter().position(|f| f == b)?;
        Some(self.co_missing[i][j])
    }
}

pub fn missing_pattern_summary(ds: &Dataset) -> PatternReport {
    let n = ds.n_rows();
    let k = ds.n_features();
    let mask = ds.mask();
    let mut per_feature = vec![0usize; k];
    let mut hist = vec![0usize; k + 1];
    let mut both = vec![vec![0usize; k]; k];
    let mut row_missing = Vec::with_capacity(k);
    for i in 0..n {
        row_missing.clear();
        row_missing.extend((0..k).filter(|&j| mask.get(i, j)));
        hist[row_missing.len()] += 1;
        for &a in &row_missing {
            per_feature[a] += 1;
            for &b in &row_missing {
                both[a][b] += 1;
            }
        }
    }
    let total: usize = per_feature.iter().sum();
    let nf = n as f64;
    PatternReport {
        n_rows: n,
        n_features: k,
        features: ds.schema().features.iter().map(|f| f.name.clone()).collect(),
        missing_fraction: total as f64 / (nf * k as f64),
        feature_missing_fraction: per_feature.iter().map(|&c| c as f64 / nf).collect(),
        missing_cell_share: per_feature
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect(),
        incomplete_row_fraction: (n - hist[0]) as f64 / nf,
        row_missing_histogram: hist,
        co_missing: both
            .iter()
            .map(|r| r.iter().map(|&c| c as f64 / nf).collect())
            .collect(),
        association: if k >= 2 { feature_association(ds).ok() } else { None },
    }
}

pub fn feature_association(ds: &Dataset) -> Result<AssociationMatrix> {
    let k = ds.n_features();
    if k < 2 {
        return Err(Error::InvalidArgument("association needs at least two features".into()));
    }
    let mut values = vec![vec![None; k]; k];
    let mut degenerate = vec![vec![false; k]; k];
    for a in 0..k {
        for b in a..k {
            let (v, degen) = if a == b {
                (Some(1.0), false)
            } else {
                match (&ds.schema().features[a].kind, &ds.schema().features[b].kind) {
                    (FeatureKind::Categorical { .. }, FeatureKind::Categorical { .. }) => {
                        let (v, d) = cramers_v(ds, a, b);
                        (Some(v), d)
                    }
                    (FeatureKind::Continuous, FeatureKind::Continuous) => {
                        let (v, d) = pearson(ds, a, b);
                        (Some(v), d)
                    }
                    _ => (None, false),
                }
            };
            values[a][b] = v;
            values[b][a] = v;
            degenerate[a][b] = degen;
            degenerate[b][a] = degen;
        }
    }
    Ok(AssociationMatrix {
        features: ds.schema().features.iter().map(|f| f.name.clone()).collect(),
        values,
        degenerate,
    })
}

fn cramers_v(ds: &Dataset, a: usize, b: usize) -> (f64, bool) {
    let ra = ds.schema().features[a].categories().len();
    let rb = ds.schema().features[b].categories().len();
    let mut table = vec![0usize; ra * rb];
    let mut n = 0usize;
    for i in 0..ds.n_rows() {
        if let (Cell::Category(x), Cell::Category(y)) = (ds.cell(i, a), ds.cell(i, b)) {
            table[x as usize * rb + y as usize] += 1;
            n += 1;
        }
    }
    let rows: Vec<usize> = (0..ra).map(|x| table[x * rb..(x + 1) * rb].iter().sum()).collect();
    let cols: Vec<usize> = (0..rb).map(|y| (0..ra).map(|x| table[x * rb + y]).sum()).collect();
    let r = rows.iter().filter(|&&c| c > 0).count();
    let c = cols.iter().filter(|&&c| c > 0).count();
    if n == 0 || r < 2 || c < 2 {
        return (0.0, true);
    }
    let nf = n as f64;
    let mut chi2 = 0.0;
    for x in 0..ra {
        for y in 0..rb {
            if rows[x] == 0 || cols[y] == 0 {
                continue;
            }
            let expected = rows[x] as f64 * cols[y] as f64 / nf;
            let d = table[x * rb + y] as f64 - expected;
            chi2 += d * d / expected;
        }
    }
    let v = (chi2 / (nf * (r.min(c) - 1) as f64)).sqrt();
    (v.clamp(0.0, 1.0), false)
}

fn pearson(ds: &Dataset, a: usize, b: usize) -> (f64, bool) {
    let pairs: Vec<(f64, f64)> = (0..ds.n_rows())
        .filter_map(|i| match (ds.cell(i, a), ds.cell(i, b)) {
            (Cell::Value(x), Cell::Value(y)) => Some((x, y)),
            _ => None,
        })
        .collect();
    if pairs.len() < 2 {
        return (0.0, true);
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, true);
    }
    ((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::toy;

    #[test]
    fn fully_observed_report_is_zero() {
        let ds = toy(&[true, false], &[&["a", "1"], &["b", "2"]], &["x", "y"]);
        let r = missing_pattern_summary(&ds);
        assert_eq!(r.missing_fraction, 0.0);
        assert_eq!(r.incomplete_row_fraction, 0.0);
        assert_eq!(r.row_missing_histogram, vec![2, 0, 0]);
        assert!(r.feature_missing_fraction.iter().all(|&f| f == 0.0));
        assert!(r.missing_cell_share.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn co_missingness_and_shares() {
        let ds = toy(
            &[true, true, true],
            &[&["?", "?", "a"], &["?", "b", "a"], &["a", "b", "?"], &["a", "b", "a"]],
            &["x", "y", "x", "y"],
        );
        let r = missing_pattern_summary(&ds);
        assert_eq!(r.feature_missing_fraction, vec![0.5, 0.25, 0.25]);
        assert_eq!(r.co_missing[0][1], 0.25);
        assert_eq!(r.co_missing[0][2], 0.0);
        assert_eq!(r.missing_cell_share, vec![0.5, 0.25, 0.25]);
        assert_eq!(r.incomplete_row_fraction, 0.75);
        assert_eq!(r.row_missing_histogram, vec![1, 2, 1, 0]);
    }

    #[test]
    fn duplicated_column_has_unit_association() {
        let ds = toy(
            &[true, true, false, false],
            &[
                &["a", "a", "1", "2"],
                &["b", "b", "2", "4"],
                &["c", "c", "3", "6.5"],
                &["a", "a", "4", "8"],
            ],
            &["x", "y", "x", "y"],
        );
        let m = feature_association(&ds).unwrap();
        assert!((m.values[0][1].unwrap() - 1.0).abs() < 1e-12);
        assert!(m.values[2][3].unwrap() > 0.99);
        assert_eq!(m.values[0][2], None);
        for i in 0..4 {
            assert_eq!(m.values[i][i], Some(1.0));
            for j in 0..4 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
    }

    #[test]
    fn constant_feature_is_flagged() {
        let ds = toy(&[true, true], &[&["a", "x"], &["a", "y"]], &["x", "y"]);
        let m = feature_association(&ds).unwrap();
        assert_eq!(m.values[0][1], Some(0.0));
        assert!(m.degenerate[0][1]);
    }
}
