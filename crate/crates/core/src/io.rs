//! CSV ingestion and output.
//!
//! Input files are rectangular numeric tables with an optional header row.
//! A header is recognised when any cell of the first row fails to parse as
//! a number. Output uses Rust's shortest round-trip float formatting, which
//! is locale-independent and exact on reload.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::data::DataMatrix;
use crate::error::{Result, ShadeError};

/// Column holding integer labels, by header name or 0-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// All-digit strings are indices; anything else is a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Reads a CSV file into a [`DataMatrix`].
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&LabelColumn>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    read_csv(file, path, label_column)
}

/// Parses CSV from any reader; `path` only labels error messages.
///
/// Rows and columns in errors are 1-based.
pub fn read_csv<R: Read>(reader: R, path: &Path, label_column: Option<&LabelColumn>) -> Result<DataMatrix> {
    let err = |row: usize, col: usize, message: String| ShadeError::Csv {
        path: PathBuf::from(path),
        row,
        col,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records: Vec<(usize, csv::StringRecord)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            err(row, 0, e.to_string())
        })?;
        let line = rec.position().map_or(records.len() + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(err(1, 0, "no data rows".into()));
    }
    let header = records[0].1.iter().any(|c| c.parse::<f64>().is_err());
    let (header_row, body) = if header {
        (Some(&records[0].1), &records[1..])
    } else {
        (None, &records[..])
    };
    let width = records[0].1.len();

    let label_idx = match label_column {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return Err(err(records[0].0, i + 1, format!("label column {i} missing: rows have {width} columns")));
        }
        Some(LabelColumn::Name(name)) => {
            let found = header_row.and_then(|h| h.iter().position(|c| c == name));
            match found {
                Some(i) => Some(i),
                None => return Err(err(records[0].0, 0, format!("no header column named `{name}`"))),
            }
        }
    };
    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(err(records[0].0, 0, "no feature columns".into()));
    }
    if body.is_empty() {
        return Err(err(records[0].0, 0, "no data rows".into()));
    }

    let mut values = Vec::with_capacity(body.len() * d);
    let mut labels = Vec::new();
    for (line, rec) in body {
        if rec.len() != width {
            return Err(err(*line, rec.len().min(width) + 1, format!("expected {width} columns, found {}", rec.len())));
        }
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                let l: i64 = cell
                    .parse()
                    .map_err(|_| err(*line, c + 1, format!("label `{cell}` is not an integer")))?;
                labels.push(l);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| err(*line, c + 1, format!("`{cell}` is not a number")))?;
                if !v.is_finite() {
                    return Err(err(*line, c + 1, format!("`{cell}` is not finite")));
                }
                values.push(v);
            }
        }
    }
    let features = Array2::from_shape_vec((body.len(), d), values).expect("row widths checked");
    match label_idx {
        Some(_) => DataMatrix::with_labels(features, labels),
        None => Ok(DataMatrix::new(features)),
    }
}

/// Writes a matrix with header `{prefix}0,{prefix}1,…`, plus a trailing
/// `label` column when labels are given.
pub fn write_matrix<W: Write>(mut w: W, m: ArrayView2<'_, f64>, prefix: &str, labels: Option<&[i64]>) -> Result<()> {
    let mut header: Vec<String> = (0..m.ncols()).map(|j| format!("{prefix}{j}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for (i, row) in m.outer_iter().enumerate() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        if let Some(l) = labels {
            line.push(',');
            line.push_str(&l[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Saves features (header `x0,…`) and, when present, labels in a final
/// `label` column.
pub fn save_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, data.features.view(), "x", data.labels.as_deref())?;
    w.flush()?;
    Ok(())
}
