use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ReportFormat;
use crate::error::{Error, Result};
use crate::perturb::Mechanism;

pub const REPORT_COLUMNS: [&str; 9] = [
    "dataset",
    "classifier",
    "treatment",
    "mechanism",
    "delta",
    "error",
    "stdev",
    "replicates",
    "seconds",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub classifier: String,
    pub treatment: String,
    pub mechanism: Mechanism,
    pub delta: f64,
    /// Mean replicate test error.
    pub error: f64,
    /// Population standard deviation of the replicate errors.
    pub stdev: f64,
    pub replicates: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub classifier: String,
    pub treatment: String,
    pub delta: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub results: Vec<RunResult>,
    #[serde(default)]
    pub failures: Vec<CellFailure>,
}

/// Mean and population standard deviation.
pub fn mean_and_stdev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Report {
    pub fn find(&self, classifier: &str, treatment: &str, delta: f64) -> Option<&RunResult> {
        self.results
            .iter()
            .find(|r| r.classifier == classifier && r.treatment == treatment && r.delta == delta)
    }

    /// Results only; failures go to stderr.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_COLUMNS)?;
        for r in &self.results {
            let reps: Vec<String> = r.replicates.iter().map(|v| v.to_string()).collect();
            w.write_record([
                r.dataset.clone(),
                r.classifier.clone(),
                r.treatment.clone(),
                r.mechanism.name().to_string(),
                r.delta.to_string(),
                r.error.to_string(),
                r.stdev.to_string(),
                reps.join(";"),
                r.seconds.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n").map_err(|e| Error::io("<report>", e))
    }

    pub fn write<W: Write>(&self, format: ReportFormat, out: W) -> Result<()> {
        match format {
            ReportFormat::Csv => self.write_csv(out),
            ReportFormat::Json => self.write_json(out),
        }
    }

    pub fn write_file(&self, format: ReportFormat, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header = rd.headers()?.clone();
        if header.iter().ne(REPORT_COLUMNS) {
            return Err(Error::Format("unexpected report header".into()));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad {what} value {s:?}")))
        };
        let mut results = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let replicates = if rec[7].is_empty() {
                Vec::new()
            } else {
                rec[7].split(';').map(|v| num(v, "replicate")).collect::<Result<_>>()?
            };
            results.push(RunResult {
                dataset: rec[0].to_string(),
                classifier: rec[1].to_string(),
                treatment: rec[2].to_string(),
                mechanism: rec[3].parse()?,
                delta: num(&rec[4], "delta")?,
                error: num(&rec[5], "error")?,
                stdev: num(&rec[6], "stdev")?,
                replicates,
                seconds: num(&rec[8], "seconds")?,
            });
        }
        Ok(Report {
            results,
            failures: Vec::new(),
        })
    }

    /// Reads either format, detected from the first non-blank byte.
    pub fn read_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim_start().starts_with('{') {
            Ok(serde_json::from_str(&text)?)
        } else {
            Self::read_csv(text.as_bytes())
        }
    }

    /// Pivot of central errors: one line per (classifier, treatment), one
    /// column per delta.
    pub fn summary_table(&self) -> String {
        let mut deltas: Vec<f64> = Vec::new();
        let mut keys: Vec<(String, String, String)> = Vec::new();
        for r in &self.results {
            if !deltas.contains(&r.delta) {
                deltas.push(r.delta);
            }
            let k = (r.dataset.clone(), r.classifier.clone(), r.treatment.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        deltas.sort_by(f64::total_cmp);
        let mut out = format!("{:<8} {:<14} {:<20}", "dataset", "classifier", "treatment");
        for d in &deltas {
            out.push_str(&format!(" {:>15}", format!("d={d}")));
        }
        out.push('\n');
        for (ds, c, t) in &keys {
            out.push_str(&format!("{ds:<8} {c:<14} {t:<20}"));
            for &d in &deltas {
                let cell = self
                    .results
                    .iter()
                    .find(|r| &r.dataset == ds && &r.classifier == c && &r.treatment == t && r.delta == d)
                    .map(|r| format!("{:.4}±{:.4}", r.error, r.stdev))
                    .unwrap_or_else(|| "-".into());
                out.push_str(&format!(" {cell:>15}"));
            }
            out.push('\n');
        }
        out
    }
}
