//! Report values and their JSON, CSV and text renderings.
//!
//! Floats are always written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`. Field order is insertion order, so a report
//! renders to the same bytes every time.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{Map, Number, Value};

pub const SCHEMA_VERSION: &str = "be-lab.report/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    F(f64),
    I(i64),
    B(bool),
    S(String),
    Floats(Vec<f64>),
    Null,
}

impl From<f64> for Val {
    fn from(x: f64) -> Self {
        Val::F(x)
    }
}

impl From<usize> for Val {
    fn from(x: usize) -> Self {
        Val::I(x as i64)
    }
}

impl From<u32> for Val {
    fn from(x: u32) -> Self {
        Val::I(x as i64)
    }
}

impl From<u64> for Val {
    fn from(x: u64) -> Self {
        Val::I(x as i64)
    }
}

impl From<bool> for Val {
    fn from(x: bool) -> Self {
        Val::B(x)
    }
}

impl From<&str> for Val {
    fn from(x: &str) -> Self {
        Val::S(x.to_string())
    }
}

impl From<String> for Val {
    fn from(x: String) -> Self {
        Val::S(x)
    }
}

impl From<Vec<f64>> for Val {
    fn from(x: Vec<f64>) -> Self {
        Val::Floats(x)
    }
}

impl<T: Into<Val>> From<Option<T>> for Val {
    fn from(x: Option<T>) -> Self {
        x.map_or(Val::Null, Into::into)
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&fmt_f64(x)).expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

impl Val {
    fn to_json(&self) -> Value {
        match self {
            Val::F(x) => json_f64(*x),
            Val::I(i) => Value::from(*i),
            Val::B(b) => Value::Bool(*b),
            Val::S(s) => Value::String(s.clone()),
            Val::Floats(v) => Value::Array(v.iter().map(|x| json_f64(*x)).collect()),
            Val::Null => Value::Null,
        }
    }

    fn to_text(&self) -> String {
        match self {
            Val::F(x) => fmt_f64(*x),
            Val::I(i) => i.to_string(),
            Val::B(b) => b.to_string(),
            Val::S(s) => s.clone(),
            Val::Floats(v) => {
                let parts: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
                format!("[{}]", parts.join(" "))
            }
            Val::Null => String::new(),
        }
    }
}

/// An ordered list of named values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fields(pub Vec<(String, Val)>);

impl Fields {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, v: impl Into<Val>) -> &mut Self {
        self.0.push((name.to_string(), v.into()));
        self
    }

    pub fn with(mut self, name: &str, v: impl Into<Val>) -> Self {
        self.push(name, v);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Val> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.0 {
            m.insert(k.clone(), v.to_json());
        }
        Value::Object(m)
    }
}

/// A table of rows sharing one column list.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Val>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Val>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(r) {
                        m.insert(c.clone(), v.to_json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }

    fn csv(&self, out: &mut String) {
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
}

fn csv_cell(v: &Val) -> String {
    let t = v.to_text();
    if t.contains([',', '"', '\n']) {
        format!("\"{}\"", t.replace('"', "\"\""))
    } else {
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn name(&self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown format '{other}' (expected json, csv or text)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: Fields,
    pub result: Fields,
    pub table: Option<Table>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Csv => self.csv(),
            Format::Text => self.text(),
        }
    }

    fn json(&self) -> String {
        let mut top = Map::new();
        top.insert("schema_version".into(), Value::String(SCHEMA_VERSION.into()));
        top.insert("command".into(), Value::String(self.command.clone()));
        top.insert("config".into(), self.config.to_json());
        let mut result = self.result.to_json();
        if let (Some(t), Value::Object(m)) = (&self.table, &mut result) {
            m.insert(t.name.clone(), t.to_json());
        }
        top.insert("result".into(), result);
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("report serializes");
        s.push('\n');
        s
    }

    /// The table when there is one, otherwise `name,value` pairs.
    fn csv(&self) -> String {
        let mut out = String::new();
        match &self.table {
            Some(t) => t.csv(&mut out),
            None => {
                out.push_str("name,value\n");
                for (k, v) in &self.result.0 {
                    let _ = writeln!(out, "{},{}", k, csv_cell(v));
                }
            }
        }
        out
    }

    fn text(&self) -> String {
        let mut out = String::new();
        let width = self.result.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.result.0 {
            let _ = writeln!(out, "{k:<width$}  {}", v.to_text());
        }
        if let Some(t) = &self.table {
            if !out.is_empty() {
                out.push('\n');
            }
            let cells: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| r.iter().map(Val::to_text).collect())
                .collect();
            let widths: Vec<usize> = (0..t.columns.len())
                .map(|j| cells.iter().map(|r| r[j].len()).chain([t.columns[j].len()]).max().unwrap_or(0))
                .collect();
            let line = |row: &[String]| {
                let parts: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                parts.join("  ").trim_end().to_string()
            };
            let _ = writeln!(out, "{}", line(&t.columns));
            for r in &cells {
                let _ = writeln!(out, "{}", line(r));
            }
        }
        out
    }
}
