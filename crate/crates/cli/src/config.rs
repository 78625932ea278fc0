//! Command-line flags, JSON config files, and their resolution into a full
//! parameter set. Config files use the flag names as flat keys; flags win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use uplink_aoi::macroscopic::ActivityModel;
use uplink_aoi::queue::SojournModel;
use uplink_aoi::units::{db_to_linear, linear_to_db};

use crate::error::{config, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "uplink-aoi", version, about = "Peak age-of-information analysis and simulation for IoT uplinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the network equilibrium and report per-class queue statistics.
    #[command(allow_negative_numbers = true)]
    Analyze(RunArgs),
    /// Run the Monte Carlo simulator and report empirical statistics.
    #[command(allow_negative_numbers = true)]
    Simulate(RunArgs),
    /// Compare two reports (typically an analysis and a simulation).
    Compare(CompareArgs),
    /// Solve over an arrival-probability grid for several thresholds.
    #[command(allow_negative_numbers = true)]
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SojournArg {
    SystemTime,
    LiteralIndex,
    ArrivalView,
}

impl From<SojournArg> for SojournModel {
    fn from(v: SojournArg) -> Self {
        match v {
            SojournArg::SystemTime => SojournModel::SystemTime,
            SojournArg::LiteralIndex => SojournModel::LiteralIndex,
            SojournArg::ArrivalView => SojournModel::ArrivalView,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivityArg {
    PerSlot,
    Frozen,
}

impl From<ActivityArg> for ActivityModel {
    fn from(v: ActivityArg) -> Self {
        match v {
            ActivityArg::PerSlot => ActivityModel::PerSlot,
            ActivityArg::Frozen => ActivityModel::Frozen,
        }
    }
}

/// Every setting of analyze, simulate and sweep. Unset fields fall back to
/// the config file, then to defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// JSON config file with flag names as keys.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fixed-point tolerance (analyze, sweep) or steady-state tolerance (simulate).
    #[arg(long)]
    pub tol: Option<f64>,

    /// Packet arrival probability per slot.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// SIR threshold in dB.
    #[arg(long, conflicts_with = "theta")]
    pub theta_db: Option<f64>,
    /// SIR threshold, linear.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Path-loss exponent.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Path-loss compensation factor.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of QoS classes.
    #[arg(long)]
    pub classes: Option<usize>,
    /// BS density per km².
    #[arg(long)]
    pub bs_density: Option<f64>,
    /// Side of the simulated square, km.
    #[arg(long)]
    pub area_side: Option<f64>,
    /// Measured slots per realization (also the warm-up budget).
    #[arg(long)]
    pub slots: Option<u64>,
    #[arg(long)]
    pub realizations: Option<u32>,

    /// Power-control target, dBm.
    #[arg(long)]
    pub rho_dbm: Option<f64>,
    /// Slots per steady-state window.
    #[arg(long)]
    pub warmup_window: Option<u64>,
    /// Devices with fewer attempts are left out of success-ratio statistics.
    #[arg(long)]
    pub min_attempts: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Starting idle probability of the fixed-point iteration.
    #[arg(long)]
    pub chi_init: Option<f64>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long, value_enum)]
    pub sojourn_model: Option<SojournArg>,
    #[arg(long, value_enum)]
    pub activity: Option<ActivityArg>,
    /// Points of the δ grid on [0, 1] for CCDF reports.
    #[arg(long)]
    pub delta_points: Option<usize>,

    /// First α of the sweep grid.
    #[arg(long)]
    pub alpha_start: Option<f64>,
    #[arg(long)]
    pub alpha_step: Option<f64>,
    /// Last α of the sweep grid (inclusive when on the grid).
    #[arg(long)]
    pub alpha_stop: Option<f64>,
    /// Thresholds in dB for the sweep, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta_db_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CompareArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Reference report directory (usually an analysis).
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    /// Report directory to check against the reference.
    #[arg(long)]
    pub simulation: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest accepted sup-norm gap between the CCDFs.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest accepted relative error of the network peak AoI.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Largest accepted relative error of the mean sojourn time (unchecked if unset).
    #[arg(long)]
    pub sojourn_rel_tol: Option<f64>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })
}

macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),* $(,)?) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field.take(); } )*
    };
}

impl RunArgs {
    /// Fill unset flags from the config file, if one was given.
    pub fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let mut file: RunArgs = read_json(&path)?;
        if file.theta.is_some() && file.theta_db.is_some() {
            return config(format!("{}: give theta or theta-db, not both", path.display()));
        }
        if self.theta.is_some() || self.theta_db.is_some() {
            file.theta = None;
            file.theta_db = None;
        }
        overlay!(self, file; out, seed, jobs, tol, alpha, theta_db, theta, eta, eps, classes, bs_density,
            area_side, slots, realizations, rho_dbm, warmup_window, min_attempts, max_iters, chi_init,
            damping, sojourn_model, activity, delta_points, alpha_start, alpha_step, alpha_stop, theta_db_list);
        Ok(self)
    }

    pub fn resolve(self, command: &str) -> Result<Params> {
        let a = self.merged()?;
        let (theta, theta_db) = match (a.theta, a.theta_db) {
            (Some(_), Some(_)) => return config("give --theta or --theta-db, not both"),
            (Some(t), None) => (t, linear_to_db(t)),
            (None, Some(db)) => (db_to_linear(db), db),
            (None, None) => (1.0, 0.0),
        };
        let default_tol = if command == "simulate" { 1e-3 } else { 1e-6 };
        if a.alpha.is_none() && command != "sweep" {
            return config("--alpha is required");
        }
        let p = Params {
            command: command.into(),
            out: a.out.unwrap_or_else(|| PathBuf::from("out")),
            seed: a.seed.unwrap_or(0),
            tol: a.tol.unwrap_or(default_tol),
            alpha: a.alpha,
            theta,
            theta_db,
            eta: a.eta.unwrap_or(4.0),
            eps: a.eps.unwrap_or(1.0),
            classes: a.classes.unwrap_or(10),
            bs_density: a.bs_density.unwrap_or(1.0),
            area_side: a.area_side.unwrap_or(10.0),
            slots: a.slots.unwrap_or(20_000),
            realizations: a.realizations.unwrap_or(20),
            rho_dbm: a.rho_dbm.unwrap_or(-90.0),
            warmup_window: a.warmup_window.unwrap_or(1_000),
            min_attempts: a.min_attempts.unwrap_or(50),
            max_iters: a.max_iters.unwrap_or(500),
            chi_init: a.chi_init.unwrap_or(0.0),
            damping: a.damping.unwrap_or(1.0),
            sojourn_model: a.sojourn_model.unwrap_or(SojournArg::SystemTime),
            activity: a.activity.unwrap_or(ActivityArg::PerSlot),
            delta_points: a.delta_points.unwrap_or(101),
            alpha_start: a.alpha_start.unwrap_or(0.05),
            alpha_step: a.alpha_step.unwrap_or(0.02),
            alpha_stop: a.alpha_stop.unwrap_or(0.99),
            theta_db_list: a.theta_db_list.unwrap_or_else(|| vec![-5.0, 0.0, 5.0]),
            jobs: a.jobs,
        };
        p.validate()?;
        Ok(p)
    }
}

impl CompareArgs {
    pub fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let mut file: CompareArgs = read_json(&path)?;
        overlay!(self, file; analysis, simulation, out, tol, rel_tol, sojourn_rel_tol);
        Ok(self)
    }
}

/// The fully resolved settings of a run, as recorded in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Params {
    pub command: String,
    pub out: PathBuf,
    pub seed: u64,
    pub tol: f64,
    /// Unused by sweeps, which take their own grid.
    pub alpha: Option<f64>,
    pub theta: f64,
    pub theta_db: f64,
    pub eta: f64,
    pub eps: f64,
    pub classes: usize,
    pub bs_density: f64,
    pub area_side: f64,
    pub slots: u64,
    pub realizations: u32,
    pub rho_dbm: f64,
    pub warmup_window: u64,
    pub min_attempts: u64,
    pub max_iters: usize,
    pub chi_init: f64,
    pub damping: f64,
    pub sojourn_model: SojournArg,
    pub activity: ActivityArg,
    pub delta_points: usize,
    pub alpha_start: f64,
    pub alpha_step: f64,
    pub alpha_stop: f64,
    pub theta_db_list: Vec<f64>,
    /// Thread count does not affect results; kept out of the manifest.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Params {
    fn validate(&self) -> Result<()> {
        if self.delta_points < 2 {
            return config("--delta-points must be at least 2");
        }
        if self.jobs == Some(0) {
            return config("--jobs must be at least 1");
        }
        if self.command == "sweep" {
            if !(self.alpha_start > 0.0 && self.alpha_step > 0.0 && self.alpha_stop <= 1.0 && self.alpha_start <= self.alpha_stop) {
                return config("sweep grid needs 0 < alpha-start <= alpha-stop <= 1 and alpha-step > 0");
            }
            if self.theta_db_list.is_empty() {
                return config("--theta-db-list is empty");
            }
        }
        Ok(())
    }

    /// Evenly spaced δ values on [0, 1].
    pub fn delta_grid(&self) -> Vec<f64> {
        let n = self.delta_points - 1;
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    /// The sweep's α grid, rounded to ten decimals so printed values stay clean.
    pub fn alpha_grid(&self) -> Vec<f64> {
        let n = ((self.alpha_stop - self.alpha_start) / self.alpha_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| ((self.alpha_start + k as f64 * self.alpha_step) * 1e10).round() / 1e10)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunArgs {
        let mut full = vec!["uplink-aoi"];
        full.extend_from_slice(args);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Analyze(a) | Command::Simulate(a) | Command::Sweep(a) => a,
            Command::Compare(_) => unreachable!(),
        }
    }

    #[test]
    fn theta_forms_are_exclusive() {
        assert!(Cli::try_parse_from(["uplink-aoi", "analyze", "--theta", "2", "--theta-db", "3"]).is_err());
        let p = parse(&["analyze", "--alpha", "0.1", "--theta-db", "-5"]).resolve("analyze").unwrap();
        assert!((p.theta - db_to_linear(-5.0)).abs() < 1e-15);
        let p = parse(&["analyze", "--alpha", "0.1", "--theta", "10"]).resolve("analyze").unwrap();
        assert!((p.theta_db - 10.0).abs() < 1e-12);
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"alpha": 0.3, "theta-db": 5, "classes": 4}"#).unwrap();
        let cfg = path.to_str().unwrap();
        let p = parse(&["analyze", "--config", cfg, "--alpha", "0.2", "--theta", "2"]).resolve("analyze").unwrap();
        assert_eq!(p.alpha, Some(0.2));
        assert_eq!(p.theta, 2.0);
        assert_eq!(p.classes, 4);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"alpah": 0.3}"#).unwrap();
        let err = parse(&["analyze", "--config", path.to_str().unwrap()]).resolve("analyze").unwrap_err();
        assert!(matches!(err, CliError::Json { .. }));
    }

    #[test]
    fn sweep_grid_hits_its_end_points() {
        let p = parse(&["sweep", "--alpha-start", "0.05", "--alpha-step", "0.02", "--alpha-stop", "0.15"])
            .resolve("sweep")
            .unwrap();
        assert_eq!(p.alpha_grid(), vec![0.05, 0.07, 0.09, 0.11, 0.13, 0.15]);
        let p = parse(&["sweep", "--theta-db-list", "-5,0,5"]).resolve("sweep").unwrap();
        assert_eq!(p.theta_db_list, vec![-5.0, 0.0, 5.0]);
    }

    #[test]
    fn alpha_is_required_outside_sweeps() {
        assert!(parse(&["analyze"]).resolve("analyze").is_err());
    }
}
