//! Strict CSV reading with file/line/field diagnostics.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct Row {
    pub line: usize,
    pub fields: Vec<String>,
}

pub(crate) struct Table<'a> {
    pub path: &'a Path,
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

impl<'a> Table<'a> {
    /// Parse CSV text whose header starts with the `required` columns, in order.
    pub fn parse(text: &str, path: &'a Path, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::parse(path, 1, "header", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        for (k, name) in required.iter().enumerate() {
            if header.get(k).map(String::as_str) != Some(*name) {
                return Err(Error::parse(
                    path,
                    1,
                    "header",
                    format!("expected column {} to be '{name}'", k + 1),
                ));
            }
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::parse(path, line, "row", e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push(Row {
                line,
                fields: rec.iter().map(str::to_string).collect(),
            });
        }
        Ok(Self { path, header, rows })
    }

    pub fn str<'r>(&self, row: &'r Row, col: usize) -> &'r str {
        &row.fields[col]
    }

    pub fn get<T: FromStr>(&self, row: &Row, col: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = &row.fields[col];
        raw.parse().map_err(|e: T::Err| {
            Error::parse(self.path, row.line, &self.header[col], format!("'{raw}': {e}"))
        })
    }

    pub fn finite(&self, row: &Row, col: usize) -> Result<f64> {
        let v: f64 = self.get(row, col)?;
        if !v.is_finite() {
            return Err(self.error(row, col, "value must be finite"));
        }
        Ok(v)
    }

    pub fn error(&self, row: &Row, col: usize, message: impl Into<String>) -> Error {
        Error::parse(self.path, row.line, &self.header[col], message)
    }
}
