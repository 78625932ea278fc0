//! Slot-level Monte Carlo simulation of the uplink network.
//!
//! Base stations form a Poisson point process on a torus, each Voronoi cell
//! holds one device placed uniformly inside it, and every slot runs
//! arrivals, transmission of head-of-line packets with full or fractional
//! path-loss inversion, Rayleigh-faded SIR tests at each BS, and ACK/NACK
//! queue updates with AoI tracking.

mod aggregate;
mod engine;
mod topology;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub use aggregate::{aggregate, EmpiricalClass, SimAggregate};
pub use engine::{replay_aoi, run_realization, DeviceRecord, RunOptions, SimRecord, TraceEvent};
pub use topology::{generate_topology, Point, SpatialRealization};

/// Fewest expected cells a generated topology may have.
pub const MIN_EXPECTED_CELLS: f64 = 20.0;

/// Which substream of a realization a generator draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Topology = 0,
    Arrivals = 1,
    Fading = 2,
}

/// Independent generator for one (realization, purpose) pair.
pub fn substream(seed: u64, realization: u64, purpose: Purpose) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((realization << 2) | purpose as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// BS intensity λ per km².
    pub bs_density: f64,
    /// Side of the square torus, km.
    pub area_side: f64,
    pub alpha: f64,
    /// Linear SIR threshold.
    pub theta: f64,
    pub eta: f64,
    pub eps: f64,
    /// Power-control target in dBm. It cancels from the SIR.
    pub rho_dbm: f64,
    /// Measured slots per realization, and also the warm-up budget.
    pub n_slots_max: u64,
    /// Slots per steady-state check window.
    pub warmup_window: u64,
    /// Largest change in windowed idle fraction accepted as steady.
    pub steady_tol: f64,
    pub seed: u64,
    pub n_realizations: u32,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            bs_density: 1.0,
            area_side: 10.0,
            alpha: 0.1,
            theta: 1.0,
            eta: 4.0,
            eps: 1.0,
            rho_dbm: -90.0,
            n_slots_max: 20_000,
            warmup_window: 1_000,
            steady_tol: 1e-3,
            seed: 0,
            n_realizations: 20,
        }
    }
}

impl NetworkConfig {
    /// Checks everything except the cell-count requirement, which only
    /// matters when a topology is generated.
    pub fn validate_dynamics(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return param(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return param(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.eta > 2.0 && self.eta.is_finite()) {
            return param(format!("eta must exceed 2, got {}", self.eta));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return param(format!("eps must lie in (0, 1], got {}", self.eps));
        }
        if !self.rho_dbm.is_finite() {
            return param("rho must be finite");
        }
        if self.n_slots_max == 0 || self.warmup_window == 0 {
            return param("slot counts must be positive");
        }
        if !(self.steady_tol > 0.0) {
            return param(format!("steady_tol must be positive, got {}", self.steady_tol));
        }
        if self.n_realizations == 0 {
            return param("need at least one realization");
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bs_density > 0.0 && self.bs_density.is_finite()) {
            return param(format!("bs_density must be positive, got {}", self.bs_density));
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return param(format!("area_side must be positive, got {}", self.area_side));
        }
        let cells = self.bs_density * self.area_side * self.area_side;
        if cells < MIN_EXPECTED_CELLS {
            return param(format!(
                "expected cell count λ·side² = {cells} is below {MIN_EXPECTED_CELLS}"
            ));
        }
        self.validate_dynamics()
    }

    /// Transmit power scale ρ in mW.
    pub fn rho_mw(&self) -> f64 {
        10f64.powf(self.rho_dbm / 10.0)
    }
}

/// Generate and run every realization in parallel; records come back in
/// realization order.
pub fn simulate(cfg: &NetworkConfig, opts: &RunOptions) -> Result<Vec<SimRecord>> {
    use rayon::prelude::*;
    cfg.validate()?;
    (0..cfg.n_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let topo = generate_topology(cfg, r)?;
            run_realization(&topo, cfg, r, opts)
        })
        .collect()
}
