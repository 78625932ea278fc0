//! Per-class Geo/Geo/1 queue analysis: steady state, stability, sojourn time,
//! and peak AoI.
//!
//! A device in a class with per-slot success probability `d` and Bernoulli(α)
//! arrivals is a birth–death chain on its backlog. Counting the backlog at
//! transmission time (after the slot's arrival), the stationary law is
//!
//! ```text
//! x0 = (d − α)/d,   x_i = R^i x0/(1 − d) for i ≥ 1,   R = α(1 − d)/((1 − α)d)
//! ```
//!
//! and the queue is stable iff α < d. Internally x_i is evaluated as
//! κ R^{i−1} with κ = α x0/((1 − α)d), which stays finite at d = 1 (a class
//! that never fails, as produced by a point-mass meta distribution).

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::macroscopic::QoSClassTable;
use crate::units::Extended;

/// Default residual tail mass at which a sojourn PMF is truncated.
pub const DEFAULT_TRUNCATION: f64 = 1e-9;
/// Hard cap on the number of PMF terms.
pub const MAX_PMF_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    pub alpha: f64,
}

impl ArrivalSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return param(format!("arrival probability must lie in (0, 1], got {alpha}"));
        }
        Ok(Self { alpha })
    }
}

/// Stationary backlog distribution of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub alpha: f64,
    pub d: f64,
    pub stable: bool,
    /// Idle probability; zero for an unstable queue.
    pub x0: f64,
    /// Geometric ratio R; meaningful only when stable.
    pub ratio: f64,
}

impl SteadyState {
    /// x_1; every x_i for i ≥ 1 is `kappa * ratio^(i-1)`.
    fn kappa(&self) -> f64 {
        self.alpha * self.x0 / ((1.0 - self.alpha) * self.d)
    }

    /// P(backlog = i). All zeros when unstable (no stationary law).
    pub fn prob(&self, i: usize) -> f64 {
        if !self.stable {
            return 0.0;
        }
        if i == 0 {
            self.x0
        } else {
            self.kappa() * self.ratio.powi(i as i32 - 1)
        }
    }

    /// Mean backlog at transmission time, if stable.
    pub fn mean_backlog(&self) -> Option<f64> {
        self.stable.then(|| self.kappa() / ((1.0 - self.ratio) * (1.0 - self.ratio)))
    }
}

/// Backlog law of a class with departure probability `d ∈ (0, 1]`.
pub fn steady_state(a: &ArrivalSpec, d: f64) -> Result<SteadyState> {
    if !(d > 0.0 && d <= 1.0) {
        return param(format!("departure probability must lie in (0, 1], got {d}"));
    }
    let alpha = a.alpha;
    if alpha < d {
        Ok(SteadyState {
            alpha,
            d,
            stable: true,
            x0: (d - alpha) / d,
            ratio: alpha * (1.0 - d) / ((1.0 - alpha) * d),
        })
    } else {
        Ok(SteadyState { alpha, d, stable: false, x0: 0.0, ratio: f64::INFINITY })
    }
}

/// Which conditioning turns the backlog law into a per-packet delay law.
///
/// All three mix negative-binomial service completions over the backlog a
/// packet must wait behind; they differ in the mixing weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SojournModel {
    /// System time in slots (≥ 1): a packet behind `v − 1` others, weighted by
    /// the time-stationary backlog `x_{v−1}`, needs `v` successes.
    #[default]
    SystemTime,
    /// The delay law with weights `x_v` and an atom `x0` at zero, taken
    /// index-for-index.
    LiteralIndex,
    /// System time with the weights replaced by the backlog an arriving packet
    /// actually finds in front of it (arrival and first attempt in the same
    /// slot). Agrees exactly with a slot-level simulation of the queue.
    ArrivalView,
}

/// A truncated sojourn-time PMF, indexed by slots m = 0, 1, 2, ….
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournPmf {
    pub model: SojournModel,
    pub pmf: Vec<f64>,
    /// Exact mean (not the truncated sum).
    pub mean: f64,
}

impl SojournPmf {
    pub fn mass(&self) -> f64 {
        self.pmf.iter().sum()
    }
}

/// Mean sojourn time, or [`Extended::UNBOUNDED`] for an unstable queue.
pub fn mean_sojourn(a: &ArrivalSpec, d: f64, model: SojournModel) -> Result<Extended> {
    let st = steady_state(a, d)?;
    if !st.stable {
        return Ok(Extended::UNBOUNDED);
    }
    let alpha = a.alpha;
    let r = st.ratio;
    let mean = match model {
        SojournModel::SystemTime => (1.0 + alpha * (1.0 - alpha) / (d - alpha)) / d,
        SojournModel::LiteralIndex => st.kappa() / (d * (1.0 - r) * (1.0 - r)),
        SojournModel::ArrivalView => 1.0 / (d * (1.0 - r)),
    };
    Ok(Extended::Finite(mean))
}

/// Sojourn-time PMF, truncated once the accumulated mass reaches
/// `1 - truncation` (or after [`MAX_PMF_TERMS`] terms).
///
/// With q = 1 − d(1 − R), the three mixtures collapse to
///
/// ```text
/// SystemTime    P(m) = x0 d (1−d)^{m−1} + κ d² Σ_{k=0}^{m−2} q^k (1−d)^{m−2−k}
/// LiteralIndex  P(0) = x0,  P(m) = κ d q^{m−1}
/// ArrivalView   P(m) = (1 − R) d q^{m−1}
/// ```
pub fn sojourn_pmf(a: &ArrivalSpec, d: f64, truncation: f64, model: SojournModel) -> Result<SojournPmf> {
    if !(truncation > 0.0 && truncation < 1.0) {
        return param(format!("truncation must lie in (0, 1), got {truncation}"));
    }
    let st = steady_state(a, d)?;
    if !st.stable {
        return Err(Error::Unstable { alpha: a.alpha, d });
    }
    let mean = mean_sojourn(a, d, model)?.finite().expect("stable queue has finite mean");
    let (x0, kappa, r) = (st.x0, st.kappa(), st.ratio);
    let dbar = 1.0 - d;
    let q = 1.0 - d * (1.0 - r);

    let atom = if model == SojournModel::LiteralIndex { x0 } else { 0.0 };
    let mut pmf = vec![atom];
    let mut acc = atom;
    // dbar^{m-1}, q^{m-1}, and the running convolution sum for m
    let (mut dbar_pow, mut q_pow, mut conv) = (1.0, 1.0, 0.0);
    while acc < 1.0 - truncation && pmf.len() < MAX_PMF_TERMS {
        let p = match model {
            SojournModel::SystemTime => x0 * d * dbar_pow + kappa * d * d * conv,
            SojournModel::LiteralIndex => kappa * d * q_pow,
            SojournModel::ArrivalView => (1.0 - r) * d * q_pow,
        };
        pmf.push(p);
        acc += p;
        conv = q * conv + dbar_pow;
        dbar_pow *= dbar;
        q_pow *= q;
    }
    Ok(SojournPmf { model, pmf, mean })
}

/// Steady-state summary of one QoS class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassQueueStats {
    pub d: f64,
    pub stable: bool,
    pub x0: f64,
    pub ratio: f64,
    /// Empty when unstable.
    pub sojourn_pmf: Vec<f64>,
    pub mean_sojourn: Extended,
}

pub fn class_stats(a: &ArrivalSpec, d: f64, model: SojournModel, truncation: f64) -> Result<ClassQueueStats> {
    let st = steady_state(a, d)?;
    let (sojourn_pmf, mean_sojourn) = if st.stable {
        let pmf = sojourn_pmf(a, d, truncation, model)?;
        (pmf.pmf, Extended::Finite(pmf.mean))
    } else {
        (Vec::new(), Extended::UNBOUNDED)
    };
    Ok(ClassQueueStats {
        d,
        stable: st.stable,
        x0: st.x0,
        ratio: st.ratio,
        sojourn_pmf,
        mean_sojourn,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAoIResult {
    pub per_class: Vec<Extended>,
    pub network: Extended,
}

/// Peak AoI per class (1/α + E[W_n]) and network-wide (1/α plus the class
/// average of E[W_n]); unbounded as soon as any class is unstable.
pub fn peak_aoi(a: &ArrivalSpec, table: &QoSClassTable, model: SojournModel) -> Result<PeakAoIResult> {
    let inter_arrival = 1.0 / a.alpha;
    let mut per_class = Vec::with_capacity(table.d.len());
    let mut total = Some(0.0);
    for &d in &table.d {
        match mean_sojourn(a, d, model)? {
            Extended::Finite(w) => {
                per_class.push(Extended::Finite(inter_arrival + w));
                total = total.map(|t| t + w);
            }
            Extended::Unbounded(_) => {
                per_class.push(Extended::UNBOUNDED);
                total = None;
            }
        }
    }
    let network = match total {
        Some(t) if !table.d.is_empty() => Extended::Finite(inter_arrival + t / table.d.len() as f64),
        _ => Extended::UNBOUNDED,
    };
    Ok(PeakAoIResult { per_class, network })
}
