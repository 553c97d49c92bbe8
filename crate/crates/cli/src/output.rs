//! Tables with a `#` metadata header, rendered as CSV or JSON.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
    /// Not applicable: empty in CSV, null in JSON.
    Na,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Na => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // non-finite values become null
            Cell::F(v) => serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::I(v) => json!(v),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
            Cell::Na => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

/// One result table plus the metadata echoed in its header.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Derived quantities (fits, limits) printed after the header.
    pub summary: Vec<(String, Cell)>,
    /// Asserted invariants and whether they hold.
    pub checks: Vec<(String, bool)>,
}

impl Report {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Self {
        Self {
            command: command.into(),
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
            summary: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn summary(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.push((name.into(), ok));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    fn header(&self, timestamp: Option<u64>) -> Vec<String> {
        let mut h = vec![format!("talenti-lab {} {}", env!("CARGO_PKG_VERSION"), self.command)];
        if let Some(t) = timestamp {
            h.push(format!("generated: {t} (unix seconds)"));
        }
        h.extend(self.meta.iter().map(|(k, v)| format!("{k}: {v}")));
        h.extend(self.summary.iter().map(|(k, v)| format!("{k}: {}", v.csv())));
        h.extend(self.checks.iter().map(|(k, ok)| format!("check {k}: {}", if *ok { "pass" } else { "FAIL" })));
        h
    }

    pub fn to_csv(&self, timestamp: Option<u64>) -> io::Result<String> {
        let mut out = String::new();
        for line in self.header(timestamp) {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))?;
        }
        let body = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(io::Error::other)?);
        Ok(out)
    }

    pub fn to_json(&self, timestamp: Option<u64>) -> String {
        let mut meta = Map::new();
        meta.insert("tool".into(), json!(format!("talenti-lab {}", env!("CARGO_PKG_VERSION"))));
        meta.insert("command".into(), json!(self.command));
        if let Some(t) = timestamp {
            meta.insert("generated".into(), json!(t));
        }
        for (k, v) in &self.meta {
            meta.insert(k.clone(), json!(v));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
            .collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let checks: Map<String, Value> = self.checks.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let doc = json!({ "meta": meta, "summary": summary, "checks": checks, "rows": rows });
        serde_json::to_string_pretty(&doc).expect("json values are serializable") + "\n"
    }
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Relative output paths land in `dir` when given.
pub fn resolve(path: &Path, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(d) if path.is_relative() => d.join(path),
        _ => path.to_path_buf(),
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> io::Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text)
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
