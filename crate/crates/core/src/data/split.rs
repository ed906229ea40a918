use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

fn train_size(n: usize, train_fraction: f64) -> Result<usize> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    // round half up
    Ok((train_fraction * n as f64 + 0.5).floor() as usize)
}

fn partition(ds: &Dataset, mut train: Vec<usize>, mut test: Vec<usize>) -> Result<(Dataset, Dataset)> {
    if train.is_empty() {
        return Err(Error::EmptyPartition("train"));
    }
    if test.is_empty() {
        return Err(Error::EmptyPartition("test"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select_rows(&train)?, ds.select_rows(&test)?))
}

/// Uniform random train/test partition. Both halves keep the source row
/// order and the source schema.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = ds.n_rows();
    let n_train = train_size(n, train_fraction)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::key("split")));
    let test = order.split_off(n_train.min(n));
    partition(ds, order, test)
}

/// Per-class split; each class contributes `round(train_fraction * n_c)`
/// rows to train.
pub fn split_stratified(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..ds.schema().classes.len() {
        let mut rows: Vec<usize> = (0..ds.n_rows())
            .filter(|&i| ds.labels()[i] as usize == class)
            .collect();
        let n_train = train_size(rows.len(), train_fraction)?;
        rows.shuffle(&mut rng::stream(seed, rng::key("split") ^ class as u64));
        test.extend(rows.split_off(n_train));
        train.extend(rows);
    }
    partition(ds, train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::toy;

    fn numbered(n: usize) -> Dataset {
        let rows: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let row_refs: Vec<Vec<&str>> = rows.iter().map(|r| vec![r.as_str()]).collect();
        let slices: Vec<&[&str]> = row_refs.iter().map(|r| r.as_slice()).collect();
        let labels: Vec<&str> = (0..n).map(|i| if i % 3 == 0 { "a" } else { "b" }).collect();
        toy(&[false], &slices, &labels)
    }

    #[test]
    fn sizes_round_half_up() {
        assert_eq!(train_size(435, 2.0 / 3.0).unwrap(), 290);
        assert_eq!(train_size(48_842, 2.0 / 3.0).unwrap(), 32_561);
        assert_eq!(train_size(3, 0.5).unwrap(), 2);
    }

    #[test]
    fn partition_is_disjoint_and_complete() {
        let ds = numbered(435);
        let (train, test) = split(&ds, 2.0 / 3.0, 11).unwrap();
        assert_eq!(train.n_rows(), 290);
        assert_eq!(test.n_rows(), 145);
        let mut all: Vec<usize> = train.row_ids().iter().chain(test.row_ids()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..435).collect::<Vec<_>>());
        assert!(train.row_ids().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = numbered(50);
        let a = split(&ds, 0.6, 3).unwrap();
        let b = split(&ds, 0.6, 3).unwrap();
        assert_eq!(a, b);
        let c = split(&ds, 0.6, 4).unwrap();
        assert_ne!(a.0.row_ids(), c.0.row_ids());
    }

    #[test]
    fn empty_half_is_an_error() {
        let ds = numbered(2);
        assert!(matches!(split(&ds, 0.1, 0), Err(Error::EmptyPartition("train"))));
        assert!(matches!(split(&ds, 0.9, 0), Err(Error::EmptyPartition("test"))));
        assert!(split(&ds, 1.0, 0).is_err());
    }

    #[test]
    fn stratified_keeps_class_shares() {
        let ds = numbered(300);
        let (train, _) = split_stratified(&ds, 2.0 / 3.0, 5).unwrap();
        let a = train.labels().iter().filter(|&&l| l == 0).count();
        assert_eq!(a, 67);
        assert_eq!(train.n_rows(), 200);
    }
}
