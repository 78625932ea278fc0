//! Fixed-point coupling of the macroscopic and queueing scales.
//!
//! Interference seen by a link depends on how often other devices are busy,
//! which depends on their queues, which depend on their success probability.
//! The spatially averaged idle probability χ closes that loop:
//!
//! ```text
//! χ → (M₁, M₂) → beta fit → d₁..d_N → x₀,ₙ (0 if α ≥ dₙ) → χ' = mean x₀,ₙ
//! ```
//!
//! iterated until |χ' − χ| < φ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::macroscopic::{
    moments, quantize, LinkParams, MetaDistribution, MetaMoments, QoSClassTable, DEFAULT_BISECTION_TOL,
};
use crate::queue::{
    class_stats, peak_aoi, steady_state, ArrivalSpec, ClassQueueStats, PeakAoIResult, SojournModel,
    DEFAULT_TRUNCATION,
};
use crate::specfun::QuadratureSpec;
use crate::units::Extended;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    /// Convergence threshold φ on |χ^k − χ^{k−1}|.
    pub tol: f64,
    pub max_iters: usize,
    pub chi_init: f64,
    /// χ ← (1 − damping) χ + damping · χ_new. 1 is plain Picard iteration.
    pub damping: f64,
    pub quantize_tol: f64,
    pub sojourn: SojournModel,
    pub quadrature: QuadratureSpec,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 500,
            // Start from a saturated network. Near the stability frontier the
            // map can have two fixed points; this start selects the lower
            // (congested) one.
            chi_init: 0.0,
            damping: 1.0,
            quantize_tol: DEFAULT_BISECTION_TOL,
            sojourn: SojournModel::SystemTime,
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return param(format!("fixed-point tolerance must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return param("max_iters must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.chi_init) {
            return param(format!("chi_init must lie in [0, 1], got {}", self.chi_init));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return param(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        self.quadrature.validate()
    }
}

/// The macroscopic picture at a given χ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub moments: MetaMoments,
    pub distribution: MetaDistribution,
    pub table: QoSClassTable,
}

pub fn macro_state(link: &LinkParams, n_classes: usize, chi: f64, cfg: &FixedPointConfig) -> Result<MacroState> {
    let p = link.at_idle(chi)?;
    let moments = moments(&p, &cfg.quadrature)?;
    let table = quantize(n_classes, &moments, cfg.quantize_tol)?;
    Ok(MacroState {
        distribution: MetaDistribution::from_moments(&moments),
        moments,
        table,
    })
}

/// One pass of the map χ ↦ χ': the class-averaged idle probability implied by
/// the classes that `chi` produces. Unstable classes contribute zero.
pub fn idle_map(
    arrival: &ArrivalSpec,
    link: &LinkParams,
    n_classes: usize,
    chi: f64,
    cfg: &FixedPointConfig,
) -> Result<f64> {
    let state = macro_state(link, n_classes, chi, cfg)?;
    average_idle(arrival, &state.table)
}

fn average_idle(arrival: &ArrivalSpec, table: &QoSClassTable) -> Result<f64> {
    let mut sum = 0.0;
    for &d in &table.d {
        sum += steady_state(arrival, d)?.x0;
    }
    Ok(sum / table.d.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub chi: f64,
    pub moments: MetaMoments,
    pub distribution: MetaDistribution,
    pub table: QoSClassTable,
    pub per_class: Vec<ClassQueueStats>,
    pub aoi: PeakAoIResult,
    pub iterations: usize,
    pub converged: bool,
    /// χ at every iterate, starting with `chi_init`.
    pub trajectory: Vec<f64>,
}

impl EquilibriumSolution {
    pub fn all_stable(&self) -> bool {
        self.per_class.iter().all(|c| c.stable)
    }

    /// Class-averaged mean sojourn time.
    pub fn mean_sojourn(&self) -> Extended {
        let mut total = 0.0;
        for c in &self.per_class {
            match c.mean_sojourn.finite() {
                Some(w) => total += w,
                None => return Extended::UNBOUNDED,
            }
        }
        Extended::Finite(total / self.per_class.len() as f64)
    }

    /// Mean of the class idle probabilities reported in `per_class`.
    pub fn class_average_idle(&self) -> f64 {
        self.per_class.iter().map(|c| c.x0).sum::<f64>() / self.per_class.len() as f64
    }
}

/// Iterate the idle-probability map to its fixed point and assemble the full
/// equilibrium. Running out of iterations is not an error: the result comes
/// back with `converged = false` and the trajectory so far.
pub fn solve(
    arrival: &ArrivalSpec,
    link: &LinkParams,
    n_classes: usize,
    cfg: &FixedPointConfig,
) -> Result<EquilibriumSolution> {
    cfg.validate()?;
    link.validate()?;
    if n_classes == 0 {
        return param("need at least one QoS class");
    }

    let mut chi = cfg.chi_init;
    let mut trajectory = vec![chi];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let mapped = idle_map(arrival, link, n_classes, chi, cfg)?;
        let next = ((1.0 - cfg.damping) * chi + cfg.damping * mapped).clamp(0.0, 1.0);
        trajectory.push(next);
        let step = (next - chi).abs();
        chi = next;
        if step < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "fixed point not reached after {iterations} iterations (alpha={}, theta={}); last chi={chi}",
            arrival.alpha,
            link.theta
        );
    }

    let state = macro_state(link, n_classes, chi, cfg)?;
    let per_class = state
        .table
        .d
        .iter()
        .map(|&d| class_stats(arrival, d, cfg.sojourn, DEFAULT_TRUNCATION))
        .collect::<Result<Vec<_>>>()?;
    let aoi = peak_aoi(arrival, &state.table, cfg.sojourn)?;
    Ok(EquilibriumSolution {
        chi,
        moments: state.moments,
        distribution: state.distribution,
        table: state.table,
        per_class,
        aoi,
        iterations,
        converged,
        trajectory,
    })
}

/// Solutions reached from several starting points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStart {
    pub solutions: Vec<EquilibriumSolution>,
    /// True when every start reached the same χ within 10·tol.
    pub agree: bool,
}

impl MultiStart {
    /// Distinct fixed points (χ values more than 10·tol apart), ascending.
    pub fn distinct_chis(&self, tol: f64) -> Vec<f64> {
        let mut chis: Vec<f64> = self.solutions.iter().map(|s| s.chi).collect();
        chis.sort_by(f64::total_cmp);
        chis.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * tol);
        chis
    }
}

pub fn solve_multistart(
    arrival: &ArrivalSpec,
    link: &LinkParams,
    n_classes: usize,
    cfg: &FixedPointConfig,
    inits: &[f64],
) -> Result<MultiStart> {
    let solutions = inits
        .iter()
        .map(|&chi_init| solve(arrival, link, n_classes, &FixedPointConfig { chi_init, ..*cfg }))
        .collect::<Result<Vec<_>>>()?;
    let lo = solutions.iter().map(|s| s.chi).fold(f64::INFINITY, f64::min);
    let hi = solutions.iter().map(|s| s.chi).fold(f64::NEG_INFINITY, f64::max);
    let agree = hi - lo <= 10.0 * cfg.tol;
    if !agree {
        log::warn!(
            "multiple fixed points at alpha={}, theta={}: chi in {:?}",
            arrival.alpha,
            link.theta,
            solutions.iter().map(|s| s.chi).collect::<Vec<_>>()
        );
    }
    Ok(MultiStart { solutions, agree })
}

/// One point of an arrival-probability sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub chi: f64,
    pub peak_aoi: Extended,
    pub mean_sojourn: Extended,
    pub all_stable: bool,
    pub converged: bool,
}

/// Solve at every α of `alphas` (in parallel); output order follows the grid.
pub fn sweep_alpha(
    alphas: &[f64],
    link: &LinkParams,
    n_classes: usize,
    cfg: &FixedPointConfig,
) -> Result<Vec<SweepPoint>> {
    alphas
        .par_iter()
        .map(|&alpha| {
            let sol = solve(&ArrivalSpec::new(alpha)?, link, n_classes, cfg)?;
            Ok(SweepPoint {
                alpha,
                chi: sol.chi,
                peak_aoi: sol.aoi.network,
                mean_sojourn: sol.mean_sojourn(),
                all_stable: sol.all_stable(),
                converged: sol.converged,
            })
        })
        .collect()
}

/// Largest α of a sweep at which every class is stable.
pub fn stability_point(points: &[SweepPoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.all_stable && p.converged)
        .map(|p| p.alpha)
        .fold(None, |best, a| Some(best.map_or(a, |b: f64| b.max(a))))
}
