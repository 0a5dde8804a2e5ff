//! CSV and JSON writers. Every CSV starts with a `# config_hash=<hex>` line
//! followed by a header whose column names carry their units; floats are
//! written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// In-memory CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell<'a> {
    F(f64),
    I(i64),
    U(usize),
    S(&'a str),
}

impl Cell<'_> {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.to_string(),
        }
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[Cell<'_>]) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row.iter().map(Cell::render).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config_hash={config_hash}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.render(config_hash))?;
        Ok(())
    }
}

/// Writes `value` as pretty JSON wrapped with the config hash.
pub fn write_json<T: Serialize>(path: &Path, config_hash: &str, value: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        config_hash: &'a str,
        #[serde(flatten)]
        body: &'a T,
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(&Wrapped { config_hash, body: value })?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Paths written by a command.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

impl Written {
    pub fn csv(&mut self, dir: &Path, name: &str, table: &CsvTable, hash: &str) -> Result<()> {
        let p = dir.join(name);
        table.write(&p, hash)?;
        self.files.push(p);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T, hash: &str) -> Result<()> {
        let p = dir.join(name);
        write_json(&p, hash, value)?;
        self.files.push(p);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["t_s", "method", "value"]);
        t.push(&[Cell::F(1.5), Cell::S("STM"), Cell::F(f64::NAN)]);
        let text = t.render("abc");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash=abc");
        assert_eq!(lines[1], "t_s,method,value");
        assert_eq!(lines[2], "1.5000000000000000e0,STM,nan");
        let back: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 1.5);
    }

    #[test]
    fn json_has_hash() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_json(&p, "h", &serde_json::json!({"a": 1})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["config_hash"], "h");
        assert_eq!(v["a"], 1);
    }
}
