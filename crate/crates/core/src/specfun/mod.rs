//! Special functions and adaptive quadrature.
//!
//! Everything here is a pure function of its arguments.

mod beta;
mod gamma;
mod hyper;
mod quad;

pub use beta::{ln_beta, reg_inc_beta};
pub use gamma::{ln_gamma, lower_inc_gamma, reg_lower_inc_gamma};
pub use hyper::{gauss_2f1, gauss_2f1_pfaff, gauss_2f1_series};
pub use quad::{integrate, integrate_semi_infinite, Integral, QuadratureSpec};
