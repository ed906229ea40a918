use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mdi_core::classify::{self, Activation, ForestParams, MlpParams, MtryRule, SvmParams, TrainedModel, TreeParams};
use mdi_core::data::{
    feature_association, load_uci_files, missing_pattern_summary, read_dataset_file, split, write_dataset, ColumnKind,
    Dataset, LoadOptions, Preset, FORMAT_MAGIC,
};
use mdi_core::encode::EncoderModel;
use mdi_core::experiment::{self, ExperimentConfig, ReportFormat, Report, DEFAULT_SEED};
use mdi_core::fetch;
use mdi_core::impute::{self, ImputeMethod, DEFAULT_K};
use mdi_core::perturb::{perturb, Mechanism, PerturbationSpec};
use mdi_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mdi", version, about = "Missing-data imputation benchmark")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download the UCI files into the cache directory.
    Fetch(FetchArgs),
    /// Report missing-data patterns of a dataset as JSON.
    Inspect(InspectArgs),
    /// Raise categorical missingness to a target fraction.
    Perturb(PerturbArgs),
    /// Fill missing cells.
    Impute(ImputeArgs),
    /// Train one classifier and report its error.
    Train(TrainArgs),
    /// Run an experiment grid from a JSON config.
    Bench(BenchArgs),
    /// Summarize report files.
    Report(ReportArgs),
}

#[derive(Args)]
struct Input {
    /// Native dataset file, or one or more UCI files (concatenated).
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Column layout of a UCI benchmark.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Comma-separated column kinds (categorical|continuous), label included.
    #[arg(long, conflicts_with = "preset")]
    schema: Option<String>,
    /// Label column for --schema.
    #[arg(long, requires = "schema")]
    label_column: Option<usize>,
    /// Missing-value token in UCI files.
    #[arg(long, default_value = "?")]
    missing: String,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn is_native(path: &Path) -> Result<bool> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(f)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    Ok(first.trim_end() == FORMAT_MAGIC)
}

impl Input {
    fn load(&self) -> Result<Dataset> {
        if self.paths.len() == 1 && is_native(&self.paths[0])? {
            return read_dataset_file(&self.paths[0]);
        }
        let mut options = match (&self.preset, &self.schema) {
            (Some(p), _) => p.options(),
            (None, Some(s)) => {
                let kinds = s.split(',').map(str::parse).collect::<Result<Vec<ColumnKind>>>()?;
                let label = self.label_column.unwrap_or(kinds.len().saturating_sub(1));
                LoadOptions::new(kinds, label)
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "UCI input needs --preset or --schema (or use a native dataset file)".into(),
                ))
            }
        };
        options.missing_symbol = self.missing.clone();
        load_uci_files(&self.paths, &options)
    }
}

#[derive(Args)]
struct FetchArgs {
    /// adult, cvrs, or both when omitted.
    #[arg(long, value_parser = parse_preset)]
    dataset: Option<Preset>,
    #[arg(long, env = fetch::CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    /// Download even when a verified copy is cached.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    input: Input,
    /// Include the pairwise association matrix.
    #[arg(long)]
    association: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value = "mcar")]
    mechanism: Mechanism,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// MNAR focus category as feature=category; repeatable. Defaults to
    /// each feature's mode.
    #[arg(long = "focus")]
    focus: Vec<String>,
    #[arg(short, long)]
    output: PathBuf,
    /// Write the receipt (masked cells and counts) as JSON.
    #[arg(long)]
    receipt: Option<PathBuf>,
}

#[derive(Args)]
struct ImputeArgs {
    #[command(flatten)]
    input: Input,
    /// mode, random_replacement, knn, model_logistic, model_random_forest, model_svm
    #[arg(long)]
    method: ImputeMethod,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Fit on this native dataset instead of the input.
    #[arg(long)]
    fit_on: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainKind {
    Tree,
    Forest,
    Mlp,
    Logistic,
    Svm,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum)]
    classifier: TrainKind,
    /// Native test dataset; otherwise the input is split.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    train_fraction: f64,
    /// Impute before encoding instead of one-hot encoding missing cells.
    #[arg(long)]
    impute: Option<ImputeMethod>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value = "sqrt", value_parser = parse_mtry)]
    mtry: MtryRule,
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden layer widths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Dropout rate for every hidden layer.
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    tanh: bool,
    /// Two hidden layers of 1024 units.
    #[arg(long, conflicts_with = "hidden")]
    paper_scale: bool,
    /// Save the trained model as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

fn parse_mtry(s: &str) -> std::result::Result<MtryRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<ReportFormat>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Re-emit the merged results instead of a summary table.
    #[arg(long, value_parser = parse_format)]
    format: Option<ReportFormat>,
}

fn write_json_out(value: &serde_json::Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn write_native(ds: &Dataset, missing: &str, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(ds, missing, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn cmd_fetch(a: FetchArgs) -> Result<()> {
    let dir = a.cache_dir.unwrap_or_else(fetch::default_cache_dir);
    let files = match a.dataset {
        Some(p) => fetch::files_for(p),
        None => fetch::FILES.to_vec(),
    };
    for f in &files {
        let path = fetch::fetch(f, &dir, a.force)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    let ds = a.input.load()?;
    let mut report = missing_pattern_summary(&ds);
    if a.association {
        report.association = Some(feature_association(&ds)?);
    }
    write_json_out(&serde_json::to_value(&report)?, a.output.as_deref())
}

fn cmd_perturb(a: PerturbArgs) -> Result<()> {
    let ds = a.input.load()?;
    let mnar_focus = if a.focus.is_empty() {
        None
    } else {
        let mut m = BTreeMap::new();
        for f in &a.focus {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--focus expects feature=category, got {f:?}")))?;
            m.insert(k.to_string(), v.to_string());
        }
        Some(m)
    };
    let spec = PerturbationSpec {
        mechanism: a.mechanism,
        delta: a.delta,
        seed: a.seed,
        mnar_focus,
    };
    let (out, receipt) = perturb(&ds, &spec)?;
    write_native(&out, &a.input.missing, &a.output)?;
    if let Some(p) = &a.receipt {
        write_json_out(&serde_json::to_value(&receipt)?, Some(p))?;
    }
    eprintln!(
        "masked {} cells; categorical missing fraction {:.4}",
        receipt.masked.len(),
        receipt.achieved_fraction
    );
    Ok(())
}

fn cmd_impute(a: ImputeArgs) -> Result<()> {
    let ds = a.input.load()?;
    let train = match &a.fit_on {
        Some(p) => read_dataset_file(p)?,
        None => ds.clone(),
    };
    let model = impute::fit(a.method.with_k(a.k), &train, a.seed)?;
    for n in model.notes() {
        log::warn!("{n}");
    }
    let out = model.transform(&ds)?;
    write_native(&out, &a.input.missing, &a.output)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let ds = a.input.load()?;
    let (train, test) = match &a.test {
        Some(p) => (ds, Some(read_dataset_file(p)?)),
        None => {
            let (tr, te) = split(&ds, a.train_fraction, a.seed)?;
            (tr, Some(te))
        }
    };
    let (train, test) = match a.impute {
        Some(m) => {
            let model = impute::fit(m.with_k(a.k), &train, a.seed)?;
            let test = test.map(|t| model.transform(&t)).transpose()?;
            (model.transform(&train)?, test)
        }
        None => (train, test),
    };
    let enc = EncoderModel::fit(&train)?;
    let x = enc.encode(&train)?;
    let mlp = || {
        let mut p = if a.paper_scale {
            MlpParams::paper_scale()
        } else {
            MlpParams::default()
        };
        if let Some(h) = &a.hidden {
            p.dropout = vec![p.dropout.first().copied().unwrap_or(0.0); h.len()];
            p.hidden_layers = h.clone();
        }
        if let Some(d) = a.dropout {
            p.dropout = vec![d; p.hidden_layers.len()];
        }
        if let Some(e) = a.epochs {
            p.epochs = e;
        }
        if a.tanh {
            p.activation = Activation::Tanh;
        }
        p.seed = a.seed;
        p
    };
    let model: TrainedModel = match a.classifier {
        TrainKind::Tree => classify::fit_decision_tree(
            &x,
            &TreeParams {
                max_depth: a.max_depth,
                ..Default::default()
            },
        )?,
        TrainKind::Forest => classify::fit_random_forest(
            &x,
            &ForestParams {
                n_trees: a.trees,
                mtry: a.mtry,
                tree: TreeParams {
                    max_depth: a.max_depth,
                    ..Default::default()
                },
                seed: a.seed,
                ..Default::default()
            },
        )?,
        TrainKind::Mlp => classify::fit_mlp(&x, &mlp())?,
        TrainKind::Logistic => classify::fit_logistic(
            &x,
            &MlpParams {
                epochs: a.epochs.unwrap_or(MlpParams::logistic().epochs),
                seed: a.seed,
                ..MlpParams::logistic()
            },
        )?,
        TrainKind::Svm => classify::fit_linear_svm(
            &x,
            &SvmParams {
                epochs: a.epochs.unwrap_or(SvmParams::default().epochs),
                seed: a.seed,
                ..Default::default()
            },
        )?,
    };
    let test_error = match &test {
        Some(t) => Some(model.error_on(&enc.encode(t)?)?),
        None => None,
    };
    if let Some(p) = &a.model_out {
        model.save_file(p)?;
    }
    write_json_out(
        &json!({
            "classifier": model.kind,
            "width": model.width,
            "train_rows": train.n_rows(),
            "test_rows": test.as_ref().map(|t| t.n_rows()),
            "training_error": model.meta.training_error,
            "test_error": test_error,
            "notes": enc.notes(),
        }),
        None,
    )
}

fn cmd_bench(a: BenchArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(j) = a.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.output {
        cfg.output = Some(o);
    }
    if let Some(f) = a.format {
        cfg.format = f;
    }
    if let Some(d) = a.data_dir {
        cfg.data_dir = Some(d);
    }
    cfg.validate()?;
    let report = experiment::run_grid(&cfg)?;
    for f in &report.failures {
        eprintln!("cell failed: {} {} delta={}: {}", f.classifier, f.treatment, f.delta, f.message);
    }
    match &cfg.output {
        Some(p) => report.write_file(cfg.format, p)?,
        None => report.write(cfg.format, io::stdout().lock())?,
    }
    Ok(report.failures.is_empty())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut merged = Report::default();
    for f in &a.files {
        let r = Report::read_file(f)?;
        merged.results.extend(r.results);
        merged.failures.extend(r.failures);
    }
    match a.format {
        Some(fmt) => merged.write(fmt, io::stdout().lock()),
        None => {
            print!("{}", merged.summary_table());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Fetch(a) => cmd_fetch(a).map(|_| true),
        Command::Inspect(a) => cmd_inspect(a).map(|_| true),
        Command::Perturb(a) => cmd_perturb(a).map(|_| true),
        Command::Impute(a) => cmd_impute(a).map(|_| true),
        Command::Train(a) => cmd_train(a).map(|_| true),
        Command::Bench(a) => cmd_bench(a),
        Command::Report(a) => cmd_report(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
