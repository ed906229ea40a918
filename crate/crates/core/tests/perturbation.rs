mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use mdi_core::data::{load_uci, split, Cell, Preset};
use mdi_core::perturb::*;
use mdi_core::rng;

fn random_categorical(seed: u64, n: usize, k: usize, missing: f64) -> mdi_core::data::Dataset {
    let mut r = rng::stream(seed, 1);
    let rows: Vec<Vec<Option<u32>>> = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| if r.gen::<f64>() < missing { None } else { Some(r.gen_range(0..3)) })
                .collect()
        })
        .collect();
    let labels: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
    common::categorical(&vec![3; k], &rows, &labels, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_count_and_no_unmasking(
        seed in any::<u64>(),
        n in 5usize..60,
        k in 1usize..5,
        delta in 0.05f64..0.95,
        pre in 0.0f64..0.05,
        mnar in any::<bool>(),
    ) {
        let ds = random_categorical(seed, n, k, pre);
        let (before, total) = ds.categorical_missing();
        let target = (delta * total as f64 + 0.5).floor() as usize;
        prop_assume!(before <= target);
        let spec = PerturbationSpec {
            mechanism: if mnar { Mechanism::Mnar } else { Mechanism::Mcar },
            delta,
            seed,
            mnar_focus: None,
        };
        let (out, receipt) = perturb(&ds, &spec).unwrap();
        prop_assert_eq!(out.missing_count(), target);
        prop_assert_eq!(receipt.masked.len(), target - before);
        prop_assert!(out.mask().covers(&ds.mask()));
        // only masking, never rewriting
        for i in 0..n {
            for j in 0..k {
                if !out.cell(i, j).is_missing() {
                    prop_assert_eq!(out.cell(i, j), ds.cell(i, j));
                }
            }
        }
        prop_assert_eq!(out.labels(), ds.labels());
        prop_assert_eq!(receipt.achieved_fraction, target as f64 / total as f64);
    }
}

#[test]
fn zero_delta_is_identity() {
    let ds = random_categorical(1, 30, 3, 0.1);
    for mechanism in [Mechanism::Mcar, Mechanism::Mnar] {
        let (out, receipt) = perturb(&ds, &PerturbationSpec { mechanism, delta: 0.0, seed: 5, mnar_focus: None }).unwrap();
        assert_eq!(out, ds);
        assert!(receipt.masked.is_empty());
    }
}

#[test]
fn out_of_range_delta_and_excess_missingness_are_errors() {
    let ds = random_categorical(1, 30, 3, 0.0);
    for bad in [0.01, 0.96, -0.1, 1.0, f64::NAN] {
        assert!(perturb_mcar(&ds, bad, 0).is_err(), "{bad}");
    }
    let heavy = random_categorical(2, 50, 3, 0.5);
    assert!(perturb_mcar(&heavy, 0.1, 0).is_err());
}

#[test]
fn continuous_features_are_never_masked() {
    let ds = common::toy(
        &[true, false],
        &[&["a", "1"], &["b", "2"], &["a", "3"], &["b", "4"]],
        &["x", "y", "x", "y"],
    );
    let (out, receipt) = perturb_mcar(&ds, 0.5, 3).unwrap();
    assert_eq!(receipt.masked.len(), 2);
    assert!((0..4).all(|i| !out.cell(i, 1).is_missing()));
}

#[test]
fn cvrs_train_at_forty_percent() {
    let ds = load_uci(&common::data_dir().join("house-votes-84.data"), &Preset::Cvrs.options()).unwrap();
    let (train, _) = split(&ds, 2.0 / 3.0, 42).unwrap();
    assert_eq!(train.n_rows(), 290);
    let before = train.missing_count();
    let (out, receipt) = perturb_mcar(&train, 0.4, 9).unwrap();
    let target = (0.4f64 * 290.0 * 16.0).round() as usize;
    assert_eq!(target, 1856);
    assert_eq!(receipt.masked.len(), target - before);
    assert_eq!(out.missing_count(), target);
    assert_eq!(receipt.pre_existing_missing, before);
}

#[test]
fn receipts_are_deterministic_per_seed() {
    let ds = random_categorical(4, 40, 4, 0.02);
    let a = perturb_mnar(&ds, 0.3, 11, &modal_focus(&ds)).unwrap();
    let b = perturb_mnar(&ds, 0.3, 11, &modal_focus(&ds)).unwrap();
    assert_eq!(a, b);
    let c = perturb_mcar(&ds, 0.3, 12).unwrap();
    assert_ne!(c.1.masked, perturb_mcar(&ds, 0.3, 11).unwrap().1.masked);
}

/// Under MCAR the categories of the masked cells follow each column's
/// marginal distribution. Pearson goodness of fit per column at α = 0.01.
#[test]
fn mcar_masks_independently_of_value() {
    let n = 10_000;
    let mut r = rng::stream(77, 0);
    // skewed marginals so a value-dependent mechanism would show
    let probs = [0.6, 0.3, 0.1];
    let rows: Vec<Vec<Option<u32>>> = (0..n)
        .map(|_| {
            (0..4)
                .map(|_| {
                    let u: f64 = r.gen();
                    Some(if u < probs[0] { 0 } else if u < probs[0] + probs[1] { 1 } else { 2 })
                })
                .collect()
        })
        .collect();
    let ds = common::categorical(&[3, 3, 3, 3], &rows, &vec![0; n], 1);
    let (_, receipt) = perturb_mcar(&ds, 0.3, 2024).unwrap();
    let critical = ChiSquared::new(2.0).unwrap().inverse_cdf(0.99);
    for j in 0..4 {
        let mut marginal = [0f64; 3];
        for i in 0..n {
            if let Cell::Category(c) = ds.cell(i, j) {
                marginal[c as usize] += 1.0;
            }
        }
        let mut masked = [0f64; 3];
        for &(i, jj) in &receipt.masked {
            if jj == j {
                if let Cell::Category(c) = ds.cell(i, j) {
                    masked[c as usize] += 1.0;
                }
            }
        }
        let m: f64 = masked.iter().sum();
        let stat: f64 = (0..3)
            .map(|c| {
                let e = m * marginal[c] / n as f64;
                (masked[c] - e).powi(2) / e
            })
            .sum();
        assert!(stat < critical, "column {j}: chi-square {stat} >= {critical}");
    }
}

/// With a 50/50 binary column focused on A and weight 3:1, the masked
/// cells hold A at rate 3/4 when the sample is small against the pool.
#[test]
fn mnar_focus_rate_is_three_quarters() {
    let n = 20_000;
    let rows: Vec<Vec<Option<u32>>> = (0..n).map(|i| vec![Some((i % 2) as u32)]).collect();
    let ds = common::categorical(&[2], &rows, &vec![0; n], 1);
    let focus = BTreeMap::from([("f0".to_string(), "c0".to_string())]);
    let (_, receipt) = perturb_mnar(&ds, 0.2, 5, &focus).unwrap();
    let m = receipt.masked.len() as f64;
    let a = receipt.masked.iter().filter(|&&(i, _)| i % 2 == 0).count() as f64;
    // sampling without replacement depletes A, pulling the rate a little
    // under 3/4; at 20% of the pool the exact expectation is about 0.73
    let rate = a / m;
    let se = (0.75 * 0.25 / m).sqrt();
    assert!((rate - 0.75).abs() < 0.03 + 4.0 * se, "rate {rate}");
    assert!(rate > 0.7);
}

#[test]
fn focus_helpers() {
    let ds = common::toy(
        &[true, true],
        &[&["y", "n"], &["y", "n"], &["n", "y"]],
        &["a", "b", "a"],
    );
    let modal = modal_focus(&ds);
    assert_eq!(modal["f0"], "y");
    assert_eq!(modal["f1"], "n");
    assert_eq!(uniform_focus(&ds, "y").len(), 2);
    let bad = BTreeMap::from([("f0".to_string(), "maybe".to_string())]);
    assert!(perturb_mnar(&ds, 0.3, 0, &bad).is_err());
}
