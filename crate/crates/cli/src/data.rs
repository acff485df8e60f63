//! CSV time series: header row, comma delimiter, optional `t` column,
//! one numeric column per coordinate.

use std::path::Path;

use bfchart::DVector;

use crate::Failure;

#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub columns: Vec<String>,
    pub t: Option<Vec<f64>>,
    pub rows: Vec<DVector<f64>>,
}

impl DataFile {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }
}

pub fn read_data(path: &Path) -> Result<DataFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_data(&text).map_err(|f| Failure::usage(format!("{}: {}", path.display(), f.message)))
}

pub fn parse_data(text: &str) -> Result<DataFile, Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Failure::usage(format!("line 1: {e}")))?
        .clone();
    let t_col = headers.iter().position(|h| h == "t");
    let columns: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != t_col)
        .map(|(_, h)| h.to_string())
        .collect();
    if columns.is_empty() {
        return Err(Failure::usage("line 1: no data columns in header"));
    }

    let mut rows = Vec::new();
    let mut t = t_col.map(|_| Vec::new());
    for record in rdr.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                pos,
                expected_len,
                len,
            } => Failure::usage(format!(
                "line {}: expected {expected_len} fields, found {len}",
                pos.as_ref().map_or(0, |p| p.line())
            )),
            _ => Failure::usage(e.to_string()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(columns.len());
        for (j, cell) in record.iter().enumerate() {
            let x: f64 = cell.parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| {
                Failure::usage(format!(
                    "line {line}, column {} ({}): '{cell}' is not a finite number",
                    j + 1,
                    &headers[j]
                ))
            })?;
            if Some(j) == t_col {
                if let Some(t) = t.as_mut() {
                    t.push(x);
                }
            } else {
                values.push(x);
            }
        }
        rows.push(DVector::from_vec(values));
    }
    if rows.is_empty() {
        return Err(Failure::usage("no data rows"));
    }
    Ok(DataFile { columns, t, rows })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with LF line endings; `t` runs from 1 when `with_t` is set.
pub fn format_data(columns: &[String], rows: &[DVector<f64>], with_t: bool) -> String {
    let mut out = String::new();
    let mut header: Vec<&str> = Vec::new();
    if with_t {
        header.push("t");
    }
    header.extend(columns.iter().map(String::as_str));
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        let mut cells: Vec<String> = Vec::with_capacity(row.len() + 1);
        if with_t {
            cells.push((i + 1).to_string());
        }
        cells.extend(row.iter().map(|x| fmt17(*x)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn default_columns(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("y{i}")).collect()
}
