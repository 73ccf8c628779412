//! Tables emitted as CSV (shortest round-trip decimals plus hex columns) or JSON.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use hml_core::numeric::f64_to_hex;
use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Shortest decimal that parses back to the same double.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn hex_or_text(v: f64) -> String {
    if v.is_finite() {
        f64_to_hex(v)
    } else {
        format!("{v}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    fn float_cols(&self) -> Vec<bool> {
        (0..self.columns.len()).map(|i| self.rows.iter().any(|r| matches!(r[i], Cell::Float(_)))).collect()
    }

    pub fn to_csv(&self) -> String {
        let fc = self.float_cols();
        let mut out = String::new();
        let mut head = Vec::new();
        for (c, f) in self.columns.iter().zip(&fc) {
            head.push(c.clone());
            if *f {
                head.push(format!("{c}_hex"));
            }
        }
        out.push_str(&head.join(","));
        out.push('\n');
        for r in &self.rows {
            let mut cells = Vec::new();
            for (v, f) in r.iter().zip(&fc) {
                match v {
                    Cell::Int(i) => cells.push(i.to_string()),
                    Cell::Float(x) => cells.push(fmt_f64(*x)),
                    Cell::Text(s) => cells.push(csv_text(s)),
                    Cell::Bool(b) => cells.push(b.to_string()),
                }
                if *f {
                    cells.push(match v {
                        Cell::Float(x) => hex_or_text(*x),
                        _ => String::new(),
                    });
                }
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    match v {
                        Cell::Int(i) => {
                            m.insert(c.clone(), Value::from(*i));
                        }
                        Cell::Float(x) => {
                            m.insert(c.clone(), serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null));
                            m.insert(format!("{c}_hex"), Value::from(hex_or_text(*x)));
                        }
                        Cell::Text(s) => {
                            m.insert(c.clone(), Value::from(s.clone()));
                        }
                        Cell::Bool(b) => {
                            m.insert(c.clone(), Value::from(*b));
                        }
                    }
                }
                Value::Object(m)
            })
            .collect();
        let mut m = Map::new();
        m.insert("table".into(), Value::from(self.name.clone()));
        m.insert("rows".into(), Value::Array(rows));
        Value::Object(m)
    }
}

/// All tables into one string.
pub fn render(tables: &[Table], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# {}", t.name);
                out.push_str(&t.to_csv());
            }
            out
        }
        Format::Json => {
            let v = Value::Array(tables.iter().map(|t| t.to_json()).collect());
            let mut s = serde_json::to_string_pretty(&v).expect("tables serialize");
            s.push('\n');
            s
        }
    }
}

/// Write via a temporary file and rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
