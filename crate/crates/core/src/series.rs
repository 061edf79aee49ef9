//! Series files: CSV with a fixed header plus an optional NDJSON mirror.
//!
//! Values are written in Rust's shortest round-trip exponent form
//! (`1.5e0`, `-3.2e-7`), so reading a file back gives the exact bits.
//! Non-finite values appear as `NaN`, `inf`, `-inf` in CSV and as `null`
//! in NDJSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:e}")
    }
}

fn parse_value(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("series value '{s}' is not a number")))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("malformed series file: {other:?}")),
    }
}

/// A parsed series: header plus numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_series(path: &Path) -> Result<Series> {
    let file = File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let columns: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != columns.len() {
            return Err(Error::invalid(format!(
                "row {} has {} values, header has {}",
                rows.len() + 1,
                rec.len(),
                columns.len()
            )));
        }
        rows.push(rec.iter().map(parse_value).collect::<Result<Vec<f64>>>()?);
    }
    Ok(Series { columns, rows })
}

fn ndjson_line(columns: &[String], row: &[f64]) -> Result<String> {
    let mut m = Map::new();
    for (c, v) in columns.iter().zip(row) {
        let val = serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number);
        m.insert(c.clone(), val);
    }
    serde_json::to_string(&Value::Object(m)).map_err(|e| Error::invalid(e.to_string()))
}

/// Appends records to a CSV file and, optionally, its NDJSON mirror.
pub struct SeriesWriter {
    columns: Vec<String>,
    csv: csv::Writer<File>,
    ndjson: Option<BufWriter<File>>,
    ndjson_path: Option<PathBuf>,
}

impl SeriesWriter {
    /// Creates (or truncates) the files and writes the header.
    pub fn create(csv_path: &Path, ndjson_path: Option<&Path>, columns: Vec<String>) -> Result<Self> {
        let mut csv = csv::Writer::from_writer(File::create(csv_path)?);
        csv.write_record(&columns).map_err(csv_error)?;
        csv.flush()?;
        let ndjson = ndjson_path.map(File::create).transpose()?.map(BufWriter::new);
        Ok(Self { columns, csv, ndjson, ndjson_path: ndjson_path.map(Path::to_path_buf) })
    }

    /// Keeps the rows of an existing series with `t <= t_keep` (the whole
    /// file is rewritten) and continues appending after them.
    pub fn resume(csv_path: &Path, ndjson_path: Option<&Path>, columns: Vec<String>, t_keep: f64) -> Result<Self> {
        let kept = if csv_path.exists() {
            let old = read_series(csv_path)?;
            if old.columns != columns {
                return Err(Error::Config(format!("existing series {} has a different header", csv_path.display())));
            }
            old.rows.into_iter().filter(|r| r[0] <= t_keep).collect()
        } else {
            Vec::new()
        };
        let mut w = Self::create(csv_path, ndjson_path, columns)?;
        for r in &kept {
            w.append(r)?;
        }
        Ok(w)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn ndjson_path(&self) -> Option<&Path> {
        self.ndjson_path.as_deref()
    }

    pub fn append(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!("row has {} values, header has {}", row.len(), self.columns.len())));
        }
        self.csv.write_record(row.iter().map(|v| format_value(*v))).map_err(csv_error)?;
        self.csv.flush()?;
        if let Some(nd) = self.ndjson.as_mut() {
            writeln!(nd, "{}", ndjson_line(&self.columns, row)?)?;
            nd.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols() -> Vec<String> {
        ["t", "a", "b"].map(String::from).to_vec()
    }

    #[test]
    fn values_round_trip_bitwise() {
        for v in [0.0, -0.0, 1.5, 1.0 / 3.0, 6.02e23, -2.5e-310, f64::MAX, f64::MIN_POSITIVE] {
            let s = format_value(v);
            assert_eq!(parse_value(&s).unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert!(parse_value(&format_value(f64::NAN)).unwrap().is_nan());
        assert_eq!(parse_value(&format_value(f64::NEG_INFINITY)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn write_read_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let csv_p = dir.path().join("s.csv");
        let nd_p = dir.path().join("s.ndjson");
        let mut w = SeriesWriter::create(&csv_p, Some(&nd_p), cols()).unwrap();
        for k in 0..5 {
            let t = k as f64 * 0.1;
            w.append(&[t, t * t, if k == 3 { f64::NAN } else { 1.0 / (k as f64 + 3.0) }]).unwrap();
        }
        assert!(w.append(&[1.0]).is_err());
        drop(w);
        let s = read_series(&csv_p).unwrap();
        assert_eq!(s.columns, cols());
        assert_eq!(s.rows.len(), 5);
        assert_eq!(s.column("a").unwrap()[4], 0.4 * 0.4);
        let nd = std::fs::read_to_string(&nd_p).unwrap();
        let lines: Vec<&str> = nd.lines().collect();
        assert_eq!(lines.len(), 5);
        let v: Value = serde_json::from_str(lines[3]).unwrap();
        assert!(v["b"].is_null());
        assert_eq!(v["t"].as_f64().unwrap(), 0.30000000000000004);

        let mut w = SeriesWriter::resume(&csv_p, Some(&nd_p), cols(), 0.2).unwrap();
        w.append(&[0.3, 9.0, 9.0]).unwrap();
        drop(w);
        let s = read_series(&csv_p).unwrap();
        assert_eq!(s.column("t").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(std::fs::read_to_string(&nd_p).unwrap().lines().count(), 4);
        let other = ["t", "z"].map(String::from).to_vec();
        assert!(SeriesWriter::resume(&csv_p, None, other, 0.2).is_err());
    }
}
