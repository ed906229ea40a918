mod common;

use mdi_core::data::{load_uci, Dataset, Preset};
use mdi_core::encode::ColumnMeaning;
use mdi_core::experiment::*;
use mdi_core::impute::ImputeMethod;
use mdi_core::perturb::Mechanism;
use mdi_core::Error;

fn cvrs() -> Dataset {
    load_uci(&common::data_dir().join("house-votes-84.data"), &Preset::Cvrs.options()).unwrap()
}

fn small_grid() -> ExperimentConfig {
    ExperimentConfig {
        treatments: vec!["one_hot".into(), "knn".into(), "mode".into()],
        deltas: vec![0.0, 0.2],
        mlp: mdi_core::classify::MlpParams {
            hidden_layers: vec![16],
            dropout: vec![0.2],
            epochs: 5,
            ..Default::default()
        },
        ..ExperimentConfig::full_grid(DatasetId::Cvrs)
    }
}

fn csv(report: &Report) -> Vec<u8> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn rerun_is_byte_identical() {
    let ds = cvrs();
    let cfg = small_grid();
    let a = run_grid_on(&cfg, &ds).unwrap();
    let b = run_grid_on(&cfg, &ds).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(a.results.len(), 3 * 3 * 2);
    // thread count does not change results
    let c = run_grid_on(&ExperimentConfig { jobs: Some(1), ..cfg }, &ds).unwrap();
    assert_eq!(csv(&a), csv(&c));
}

#[test]
fn adding_cells_leaves_existing_cells_alone() {
    let ds = cvrs();
    let narrow = ExperimentConfig {
        treatments: vec!["knn".into()],
        classifiers: vec![ClassifierKind::RandomForest],
        deltas: vec![0.2],
        ..small_grid()
    };
    let wide = small_grid();
    let a = run_grid_on(&narrow, &ds).unwrap();
    let b = run_grid_on(&wide, &ds).unwrap();
    assert_eq!(a.results.len(), 1);
    assert_eq!(Some(&a.results[0]), b.find("random_forest", "knn", 0.2));
}

#[test]
fn single_cell_grid() {
    let cfg = ExperimentConfig {
        treatments: vec!["one_hot".into()],
        classifiers: vec![ClassifierKind::DecisionTree],
        deltas: vec![0.0],
        ..small_grid()
    };
    let report = run_grid_on(&cfg, &cvrs()).unwrap();
    assert_eq!(report.results.len(), 1);
    let r = &report.results[0];
    assert_eq!(r.replicates.len(), 5);
    let (m, s) = mean_and_stdev(&r.replicates);
    assert_eq!((r.error, r.stdev), (m, s));
    assert!((0.0..=1.0).contains(&r.error) && r.stdev >= 0.0);
}

/// The paper grid has 3 x 7 x 5 = 105 cells. On CVRs at δ = 0.4 almost no
/// training row survives intact, so donor- and model-based imputers have
/// no complete cases and those cells fail with a diagnostic.
#[test]
fn cvrs_paper_grid_accounts_for_every_cell() {
    let cfg = ExperimentConfig::full_grid(DatasetId::Cvrs);
    let report = run_grid_on(&cfg, &cvrs()).unwrap();
    assert_eq!(report.results.len() + report.failures.len(), 105);
    for f in &report.failures {
        assert_eq!(f.delta, 0.4);
        assert!(f.treatment != "one_hot" && f.treatment != "mode");
        assert!(f.message.contains(&Error::NoCompleteCases.to_string()));
    }
    let text = String::from_utf8(csv(&report)).unwrap();
    assert_eq!(text.lines().count(), report.results.len() + 1);
    assert_eq!(text.lines().next().unwrap(), REPORT_COLUMNS.join(","));
}

#[test]
fn mnar_grid_runs_end_to_end() {
    let cfg = ExperimentConfig {
        mechanism: Mechanism::Mnar,
        ..small_grid()
    };
    let report = run_grid_on(&cfg, &cvrs()).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.results.len(), 18);
    assert!(report.results.iter().all(|r| r.mechanism == Mechanism::Mnar));
    let mcar = run_grid_on(&small_grid(), &cvrs()).unwrap();
    assert_ne!(
        mcar.find("random_forest", "knn", 0.2).unwrap().replicates,
        report.find("random_forest", "knn", 0.2).unwrap().replicates
    );
}

#[test]
fn test_partition_is_shared_and_untouched() {
    let ds = cvrs();
    let cfg = small_grid();
    let (train, test) = cfg.split(&ds).unwrap();
    let (_, again) = cfg.split(&ds).unwrap();
    assert_eq!(test, again);
    let mut labels = None;
    for &delta in &[0.0, 0.1, 0.3] {
        let perturbed = perturb_train(&cfg, &train, delta).unwrap();
        for t in [Treatment::OneHot, Treatment::Impute(ImputeMethod::Knn { k: 5 })] {
            let p = prepare(&perturbed, &test, t, 1).unwrap();
            assert_eq!(p.test.n_rows(), 145);
            let l = labels.get_or_insert_with(|| p.test.labels.clone());
            assert_eq!(l, &p.test.labels);
        }
    }
    assert_eq!(perturb_train(&cfg, &train, 0.0).unwrap(), train);
}

#[test]
fn imputed_treatments_feed_no_active_missing_columns() {
    let ds = cvrs();
    let cfg = small_grid();
    let (train, test) = cfg.split(&ds).unwrap();
    let perturbed = perturb_train(&cfg, &train, 0.2).unwrap();
    for m in [ImputeMethod::Mode, ImputeMethod::Knn { k: 5 }, ImputeMethod::RandomReplacement] {
        let p = prepare(&perturbed, &test, Treatment::Impute(m), 3).unwrap();
        for x in [&p.train, &p.test] {
            for prov in &x.provenance {
                if prov.meaning == ColumnMeaning::Missing {
                    assert!(x.features.column(prov.column).iter().all(|&v| v == 0.0), "{m}");
                }
            }
        }
    }
}

#[test]
fn replicate_recipes() {
    assert_eq!(TREE_DEPTHS, [Some(4), Some(8), Some(16), None, Some(32)]);
    assert_eq!(MLP_EPOCH_FACTORS, [1.0, 0.8, 0.9, 1.1, 1.2]);
    assert_eq!(FOREST_VARIANTS.iter().map(|v| v.0).collect::<Vec<_>>(), vec![50, 100, 200, 100, 100]);
    let ds = cvrs();
    let cfg = ExperimentConfig { replicates: 3, ..small_grid() };
    let (train, test) = cfg.split(&ds).unwrap();
    let p = prepare(&train, &test, Treatment::OneHot, 0).unwrap();
    let models = replicate_models(&cfg, ClassifierKind::Mlp, &p.train, 7).unwrap();
    let epochs: Vec<usize> = models.iter().map(|m| m.meta.epochs_run).collect();
    assert_eq!(epochs, vec![5, 4, 5]);
    let seeds: Vec<u64> = models.iter().map(|m| m.meta.seed).collect();
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
}

#[test]
fn stdev_is_order_invariant() {
    let (m1, s1) = mean_and_stdev(&[0.1, 0.2, 0.4]);
    let (m2, s2) = mean_and_stdev(&[0.4, 0.1, 0.2]);
    assert!((m1 - m2).abs() < 1e-15 && (s1 - s2).abs() < 1e-15);
    // population sigma
    assert!((mean_and_stdev(&[0.0, 1.0]).1 - 0.5).abs() < 1e-15);
}

#[test]
fn report_formats_agree() {
    let report = run_grid_on(&small_grid(), &cvrs()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (c, j) = (dir.path().join("r.csv"), dir.path().join("r.json"));
    report.write_file(ReportFormat::Csv, &c).unwrap();
    report.write_file(ReportFormat::Json, &j).unwrap();
    let from_csv = Report::read_file(&c).unwrap();
    let from_json = Report::read_file(&j).unwrap();
    assert_eq!(from_csv.results.len(), from_json.results.len());
    for (a, b) in from_csv.results.iter().zip(&from_json.results) {
        assert_eq!(a, b);
    }
    assert_eq!(from_json, report);
}

#[test]
fn config_validation() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let ok = write(
        "ok.json",
        r#"{"dataset": "cvrs", "data_dir": "d", "treatments": ["one_hot", "knn"], "classifiers": ["decision_tree"]}"#,
    );
    let cfg = ExperimentConfig::from_file(&ok).unwrap();
    assert_eq!(cfg.data_dir.unwrap(), dir.path().join("d"));
    assert_eq!(cfg.deltas, vec![0.0, 0.1, 0.2, 0.3, 0.4]);

    let typo = write(
        "typo.json",
        r#"{"dataset": "cvrs", "treatment": ["one_hot"], "treatments": ["one_hot"], "classifiers": ["mlp"]}"#,
    );
    assert!(matches!(ExperimentConfig::from_file(&typo), Err(Error::Config(_))));
    let unknown = write(
        "unknown.json",
        r#"{"dataset": "cvrs", "treatments": ["mice"], "classifiers": ["mlp"]}"#,
    );
    let err = ExperimentConfig::from_file(&unknown).unwrap_err();
    assert!(err.to_string().contains("mice"));
    for bad in [
        r#"{"dataset": "cvrs", "treatments": [], "classifiers": ["mlp"]}"#,
        r#"{"dataset": "cvrs", "treatments": ["knn"], "classifiers": ["mlp"], "deltas": [0.5, 0.5]}"#,
        r#"{"dataset": "cvrs", "treatments": ["knn"], "classifiers": ["mlp"], "deltas": [0.99]}"#,
        r#"{"dataset": "cvrs", "treatments": ["knn"], "classifiers": ["mlp"], "replicates": 6}"#,
        r#"{"dataset": "cvrs", "treatments": ["knn"], "classifiers": ["mlp"], "jobs": 0}"#,
        r#"{"dataset": "custom", "treatments": ["knn"], "classifiers": ["mlp"]}"#,
    ] {
        assert!(ExperimentConfig::from_file(&write("bad.json", bad)).is_err(), "{bad}");
    }
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let cfg = ExperimentConfig::from_file(&entry.unwrap().path()).unwrap();
        assert_eq!(cfg.parsed_treatments().unwrap().len(), 7);
        n += 1;
    }
    assert_eq!(n, 4);
}

#[test]
fn cell_seeds_depend_on_coordinates_only() {
    let t = Treatment::Impute(ImputeMethod::Knn { k: 5 });
    let a = cell_seed(42, ClassifierKind::Mlp, t, Mechanism::Mcar, 0.1);
    assert_eq!(a, cell_seed(42, ClassifierKind::Mlp, t, Mechanism::Mcar, 0.1));
    assert_ne!(a, cell_seed(42, ClassifierKind::Mlp, t, Mechanism::Mcar, 0.2));
    assert_ne!(a, cell_seed(43, ClassifierKind::Mlp, t, Mechanism::Mcar, 0.1));
    assert_ne!(perturb_seed(42, Mechanism::Mcar, 0.1), perturb_seed(42, Mechanism::Mnar, 0.1));
}
