//! Output files: a comment header followed by CSV rows.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The header every output file starts with. Only the data rows after it
/// are reproducible; the wall-clock line differs between runs.
pub fn header(command: &str, cfg: &RunConfig, seed: u64, elapsed: Duration) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# sam {VERSION}");
    let _ = writeln!(h, "# command: {command}");
    for (k, v) in cfg.entries() {
        let _ = writeln!(h, "# config: {k} = {v}");
    }
    let _ = writeln!(h, "# seed: {seed}");
    let _ = writeln!(h, "# wall_clock_seconds: {:.3}", elapsed.as_secs_f64());
    h
}

/// CSV body assembled in memory and written once the run has finished.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { notes: Vec::new(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    /// Notes as comments, then the header row and the data rows.
    pub fn body(&self) -> String {
        let mut s = String::new();
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

pub fn write_file(dir: &Path, name: &str, header: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, format!("{header}{body}")).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// The lines of a written file that are not comments.
pub fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

pub fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}
