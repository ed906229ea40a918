//! Self-describing text format for datasets.
//!
//! ```text
//! #mdi-dataset 1
//! #schema {"features":[...],"label_name":"party","classes":[...],"missing":"?"}
//! row,handicapped-infants,...,party
//! 0,n,...,republican
//! ```
//!
//! The first column is the source row index. Continuous values are written
//! in shortest round-trip form, so reading back yields identical bits.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Cell, Dataset, FeatureKind, FeatureSchema, Schema};
use crate::error::{Error, Result};

pub const FORMAT_MAGIC: &str = "#mdi-dataset 1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    features: Vec<FeatureSchema>,
    label_name: String,
    classes: Vec<String>,
    missing: String,
}

pub fn write_dataset<W: Write>(ds: &Dataset, missing_symbol: &str, out: W) -> Result<()> {
    let mut out = out;
    let schema = ds.schema();
    if schema
        .features
        .iter()
        .any(|f| f.categories().iter().any(|c| c == missing_symbol))
    {
        return Err(Error::InvalidArgument(format!(
            "missing symbol {missing_symbol:?} collides with a category"
        )));
    }
    let header = Header {
        features: schema.features.clone(),
        label_name: schema.label_name.clone(),
        classes: schema.classes.clone(),
        missing: missing_symbol.to_string(),
    };
    let io = |e| Error::io("<output>", e);
    writeln!(out, "{FORMAT_MAGIC}").map_err(io)?;
    writeln!(out, "#schema {}", serde_json::to_string(&header)?).map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let mut record: Vec<String> = Vec::with_capacity(ds.n_features() + 2);
    record.push("row".into());
    record.extend(schema.features.iter().map(|f| f.name.clone()));
    record.push(schema.label_name.clone());
    w.write_record(&record)?;
    for i in 0..ds.n_rows() {
        record.clear();
        record.push(ds.row_ids()[i].to_string());
        record.extend((0..ds.n_features()).map(|j| ds.token(i, j, missing_symbol)));
        record.push(schema.classes[ds.labels()[i] as usize].clone());
        w.write_record(&record)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn write_dataset_file(ds: &Dataset, missing_symbol: &str, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, missing_symbol, std::io::BufWriter::new(file))
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut input = BufReader::new(input);
    let mut line = String::new();
    let io = |e| Error::io("<input>", e);
    input.read_line(&mut line).map_err(io)?;
    if line.trim_end() != FORMAT_MAGIC {
        return Err(Error::Format(format!("expected {FORMAT_MAGIC:?} header")));
    }
    line.clear();
    input.read_line(&mut line).map_err(io)?;
    let json = line
        .trim_end()
        .strip_prefix("#schema ")
        .ok_or_else(|| Error::Format("expected #schema line".into()))?;
    let header: Header = serde_json::from_str(json)?;
    let schema = Schema {
        features: header.features,
        label_name: header.label_name,
        classes: header.classes,
    };
    schema.validate()?;
    let k = schema.features.len();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let names = reader.headers()?.clone();
    if names.len() != k + 2 {
        return Err(Error::Format(format!(
            "column header has {} names, schema needs {}",
            names.len(),
            k + 2
        )));
    }
    let mut cells = Vec::new();
    let mut labels = Vec::new();
    let mut row_ids = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Format(format!("line {line}: {what}"));
        if record.len() != k + 2 {
            return Err(bad("wrong column count"));
        }
        row_ids.push(record[0].parse().map_err(|_| bad("bad row index"))?);
        for (j, f) in schema.features.iter().enumerate() {
            let tok = &record[j + 1];
            if tok == header.missing {
                cells.push(Cell::Missing);
                continue;
            }
            cells.push(match &f.kind {
                FeatureKind::Categorical { .. } => Cell::Category(
                    f.category_index(tok)
                        .ok_or_else(|| bad(&format!("unknown category {tok:?}")))?
                        as u32,
                ),
                FeatureKind::Continuous => {
                    Cell::Value(tok.parse().map_err(|_| bad(&format!("bad number {tok:?}")))?)
                }
            });
        }
        let label = &record[k + 1];
        labels.push(
            schema
                .classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| bad(&format!("unknown class {label:?}")))? as u32,
        );
    }
    Dataset::new(Arc::new(schema), cells, labels, row_ids)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::toy;

    #[test]
    fn round_trip() {
        let ds = toy(
            &[true, false],
            &[&["a,b", "0.1"], &["?", "1e300"], &["c", "?"]],
            &["x", "y", "x"],
        );
        let mut buf = Vec::new();
        write_dataset(&ds, "?", &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn rejects_foreign_input() {
        assert!(read_dataset("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn missing_symbol_collision() {
        let ds = toy(&[true], &[&["NA"]], &["x"]);
        assert!(write_dataset(&ds, "NA", Vec::new()).is_err());
    }
}
