//! CSV tables shared by the writers, the plotter and the acceptance checks.

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Header plus string cells; numbers are stored in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // shortest representation that parses back to the same bits
        format!("{v:?}")
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            path: PathBuf::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let csv_err = |source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let csv_err = |source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::ReaderBuilder::new().from_path(path).map_err(csv_err)?;
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(CliError::EmptyCsv { path: path.into() });
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            return Err(CliError::EmptyCsv { path: path.into() });
        }
        Ok(Self {
            path: path.into(),
            header,
            rows,
        })
    }

    pub fn index(&self, column: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| CliError::MissingColumn {
                path: self.path.clone(),
                column: column.into(),
            })
    }

    pub fn text(&self, column: &str) -> Result<Vec<&str>> {
        let k = self.index(column)?;
        Ok(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn numbers(&self, column: &str) -> Result<Vec<f64>> {
        let k = self.index(column)?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>().map_err(|_| CliError::BadValue {
                    path: self.path.clone(),
                    column: column.into(),
                    value: r[k].clone(),
                })
            })
            .collect()
    }

    /// Rows whose `column` equals `value`.
    pub fn filter(&self, column: &str, value: &str) -> Result<Table> {
        let k = self.index(column)?;
        Ok(Table {
            path: self.path.clone(),
            header: self.header.clone(),
            rows: self.rows.iter().filter(|r| r[k] == value).cloned().collect(),
        })
    }

    /// Distinct values of `column` in first-seen order.
    pub fn distinct(&self, column: &str) -> Result<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        for v in self.text(column)? {
            if !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
        Ok(out)
    }
}
