//! Peak age-of-information analysis for large-scale IoT uplink networks.
//!
//! The crate couples two scales:
//!
//! * [`macroscopic`]: stochastic-geometry moments of the per-link transmission
//!   success probability, its beta-approximated meta distribution, and the
//!   quantization of that distribution into `N` equiprobable QoS classes;
//! * [`queue`]: per-class Geo/Geo/1 queue statistics (idle probability,
//!   sojourn time) and the resulting peak AoI.
//!
//! [`fixed_point`] closes the loop between them through the spatially averaged
//! idle probability χ, and [`sim`] is an independent slot-level Monte Carlo
//! simulator used to validate the analysis.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixed_point;
pub mod macroscopic;
pub mod queue;
pub mod sim;
pub mod specfun;
pub mod units;

pub use error::{Error, Result};
