//! Report files: CSV tables, JSON summaries, and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use uplink_aoi::units::Extended;

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const CCDF: &str = "ccdf.csv";
pub const SUMMARY: &str = "summary.json";

/// Where a run came from and what it wrote.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub parameters: serde_json::Value,
    pub seeds: Vec<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

/// Collects output files for one run and writes its manifest last.
pub struct Run {
    dir: PathBuf,
    command: String,
    parameters: serde_json::Value,
    seeds: Vec<u64>,
    started: SystemTime,
    outputs: Vec<String>,
}

impl Run {
    pub fn start(dir: &Path, command: &str, parameters: &impl Serialize, seeds: Vec<u64>) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
        let parameters = serde_json::to_value(parameters).map_err(|source| CliError::Json { path: dir.into(), source })?;
        Ok(Self {
            dir: dir.into(),
            command: command.into(),
            parameters,
            seeds,
            started: SystemTime::now(),
            outputs: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        self.outputs.push(name.into());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json { path, source })?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn finish(self) -> Result<()> {
        let manifest = Manifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            parameters: self.parameters,
            seeds: self.seeds,
            started: humantime::format_rfc3339_seconds(self.started).to_string(),
            finished: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            outputs: self.outputs,
        };
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|source| CliError::Json { path: path.clone(), source })?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}

/// A CSV table with a fixed header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |v| v.to_string())
}

pub fn ccdf_csv(delta: &[f64], ccdf: &[f64]) -> String {
    let mut csv = Csv::new(&["delta", "ccdf"]);
    for (d, c) in delta.iter().zip(ccdf) {
        csv.row(&[d.to_string(), c.to_string()]);
    }
    csv.into_string()
}

/// Fields every report summary carries, whatever produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Headline {
    pub peak_aoi: Option<Extended>,
    pub mean_sojourn: Option<Extended>,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    read_json(&dir.join(MANIFEST))
}

pub fn read_headline(dir: &Path) -> Result<Headline> {
    read_json(&dir.join(SUMMARY))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })
}

/// Parse a `delta,ccdf` file.
pub fn read_ccdf(dir: &Path) -> Result<Vec<(f64, f64)>> {
    let path = dir.join(CCDF);
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let mut lines = text.lines();
    if lines.next() != Some("delta,ccdf") {
        return Err(CliError::Report { path, detail: "expected header delta,ccdf".into() });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || CliError::Report { path: path.clone(), detail: format!("line {}: {line:?}", i + 2) };
            let (d, c) = line.split_once(',').ok_or_else(bad)?;
            Ok((d.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccdf_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(CCDF), ccdf_csv(&[0.0, 0.5, 1.0], &[1.0, 0.25, 0.0])).unwrap();
        assert_eq!(read_ccdf(dir.path()).unwrap(), vec![(0.0, 1.0), (0.5, 0.25), (1.0, 0.0)]);
    }

    #[test]
    fn unbounded_cells_use_the_inf_token() {
        assert_eq!(Extended::UNBOUNDED.to_string(), "inf");
        let h: Headline = serde_json::from_str(r#"{"peak_aoi": "inf", "mean_sojourn": 2.5}"#).unwrap();
        assert!(h.peak_aoi.unwrap().is_unbounded());
        assert_eq!(h.mean_sojourn.unwrap().finite(), Some(2.5));
    }
}
