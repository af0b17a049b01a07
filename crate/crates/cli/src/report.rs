use std::fmt::Write as _;
use std::path::Path;

use mhdlab_core::MhdError;
use serde::Serialize;

/// Whitespace-aligned text table with a header line.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, r: Vec<String>) {
        debug_assert_eq!(r.len(), self.header.len());
        self.rows.push(r);
    }

    pub fn num(v: f64) -> String {
        if v.is_finite() {
            format!("{v:.10e}")
        } else {
            v.to_string()
        }
    }

    pub fn render(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = r.iter().zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }

    pub fn write(&self, dir: &Path, name: &str) -> std::io::Result<()> {
        std::fs::write(dir.join(name), self.render())
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub status: &'static str,
    pub command: &'a str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub config_hash: &'a str,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    std::fs::write(path, s)
}

/// Exit status and stable kind name for each error class.
pub fn classify(e: &MhdError) -> (i32, &'static str) {
    match e {
        MhdError::Config(_) => (2, "config_error"),
        MhdError::Geometry(_) | MhdError::Resolution(_) | MhdError::Weight(_) => (3, "geometry_error"),
        MhdError::Uncontrollable(_) => (4, "uncontrollable"),
        MhdError::Actuator(_) | MhdError::Precondition(_) | MhdError::Projection(_) => (5, "precondition_failed"),
        MhdError::Instability(_) => (6, "instability"),
        MhdError::Numerical { .. } | MhdError::Fit(_) => (7, "numerical_error"),
        _ => (8, "model_error"),
    }
}

#[derive(Serialize)]
pub struct ErrorDoc<'a> {
    pub status: &'static str,
    pub kind: &'a str,
    pub exit_code: i32,
    pub message: String,
    pub command: &'a str,
    pub version: &'static str,
    pub config_hash: Option<&'a str>,
}
