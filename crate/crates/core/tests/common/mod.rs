#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use mdi_core::data::{Cell, Dataset, FeatureSchema, Schema};

/// Benchmark files; `MDI_DATA_DIR` overrides the vendored copy.
pub fn data_dir() -> PathBuf {
    std::env::var_os("MDI_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Dataset from string rows. `cat[j]` marks categorical columns; "?" is
/// missing. Vocabularies are first-seen.
pub fn toy(cat: &[bool], rows: &[&[&str]], labels: &[&str]) -> Dataset {
    let mut vocab: Vec<Vec<String>> = vec![Vec::new(); cat.len()];
    let mut classes: Vec<String> = Vec::new();
    let mut cells = Vec::new();
    for row in rows {
        for (j, tok) in row.iter().enumerate() {
            cells.push(match (*tok, cat[j]) {
                ("?", _) => Cell::Missing,
                (t, true) => {
                    let pos = vocab[j].iter().position(|c| c == t).unwrap_or_else(|| {
                        vocab[j].push(t.to_string());
                        vocab[j].len() - 1
                    });
                    Cell::Category(pos as u32)
                }
                (t, false) => Cell::Value(t.parse().unwrap()),
            });
        }
    }
    let labels: Vec<u32> = labels
        .iter()
        .map(|l| {
            classes.iter().position(|c| c == l).unwrap_or_else(|| {
                classes.push(l.to_string());
                classes.len() - 1
            }) as u32
        })
        .collect();
    let features = cat
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let mut f = if c {
                FeatureSchema::categorical(format!("f{j}"), vocab[j].clone())
            } else {
                FeatureSchema::continuous(format!("f{j}"))
            };
            f.had_missing = rows.iter().any(|r| r[j] == "?");
            f
        })
        .collect();
    let schema = Schema {
        features,
        label_name: "y".into(),
        classes,
    };
    let n = labels.len();
    Dataset::new(Arc::new(schema), cells, labels, (0..n).collect()).unwrap()
}

/// All-categorical dataset from category indices; `None` is missing.
pub fn categorical(n_categories: &[usize], rows: &[Vec<Option<u32>>], labels: &[u32], n_classes: usize) -> Dataset {
    let features = n_categories
        .iter()
        .enumerate()
        .map(|(j, &k)| FeatureSchema::categorical(format!("f{j}"), (0..k).map(|c| format!("c{c}")).collect()))
        .collect();
    let schema = Schema {
        features,
        label_name: "y".into(),
        classes: (0..n_classes).map(|c| format!("k{c}")).collect(),
    };
    let cells = rows
        .iter()
        .flat_map(|r| r.iter().map(|c| c.map_or(Cell::Missing, Cell::Category)))
        .collect();
    Dataset::new(Arc::new(schema), cells, labels.to_vec(), (0..labels.len()).collect()).unwrap()
}
