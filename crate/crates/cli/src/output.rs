//! Result tables and their CSV / JSON serializations.

use serde_json::{Map, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// 17 significant digits, so every value round-trips exactly.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => Value::from(*x),
            Cell::Num(x) => Value::from(format_num(*x)),
            Cell::Int(k) => Value::from(*k),
            Cell::Bool(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Writes one `<name>.csv` per table, or a single `results.json` holding
/// every table under its name. Returns the files written.
pub fn write_tables(dir: &Path, format: Format, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let write = |path: PathBuf, text: String| {
        fs::write(&path, text).map_err(|e| CliError::Io(path.clone(), e))?;
        Ok::<_, CliError>(path)
    };
    match format {
        Format::Csv => tables
            .iter()
            .map(|t| write(dir.join(format!("{}.csv", t.name)), t.to_csv()))
            .collect(),
        Format::Json => {
            let obj: Map<String, Value> = tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
            let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("tables serialize");
            text.push('\n');
            Ok(vec![write(dir.join("results.json"), text)?])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_num(0.1), "1.0000000000000001e-1");
        assert_eq!(format_num(f64::INFINITY), "inf");
        assert_eq!(format_num(-1.5), "-1.5000000000000000e0");
        assert_eq!(format_num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("roc", &["weight", "mode"]);
        t.push(vec![1.0.into(), "a,b".into()]);
        assert_eq!(t.to_csv(), "weight,mode\n1.0000000000000000e0,\"a,b\"\n");
    }
}
