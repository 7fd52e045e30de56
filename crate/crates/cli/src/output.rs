use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Output root when VIRLAB_OUT is unset.
pub const DEFAULT_OUT: &str = "virlab-out";
pub const OUT_ENV: &str = "VIRLAB_OUT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// A CSV file: `# key: value` comment lines, a header row, data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.into_iter().map(|c| c.0).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// A formatted CSV field.
pub struct Cell(pub String);

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell(format!("{x:e}"))
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell(x.to_string())
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell(x.replace([',', '\n'], ";"))
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::from(x.as_str())
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub experiment: &'a str,
    pub config: &'a C,
    pub seed: u64,
    pub workers: usize,
    pub fingerprint: &'a str,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub status: &'a str,
    pub error: Option<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub virlab: &'static str,
    pub virlab_cli: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { virlab: virlab::VERSION, virlab_cli: env!("CARGO_PKG_VERSION") }
    }
}

pub fn write_tables(dir: &Path, tables: &[Table]) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for t in tables {
        let file = format!("{}.csv", t.name);
        fs::write(dir.join(&file), t.to_csv())?;
        names.push(file);
    }
    Ok(names)
}

pub fn write_manifest<C: Serialize>(dir: &Path, m: &Manifest<'_, C>) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(m).map_err(io::Error::other)?;
    fs::write(dir.join("manifest.json"), text + "\n")
}
