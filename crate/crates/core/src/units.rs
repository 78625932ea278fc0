//! Decibel conversions. Everything past the configuration boundary is linear.

use serde::{Deserialize, Serialize};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// A quantity that is either finite or unbounded (an unstable queue's delay).
///
/// Serialized as the number itself, or as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Extended {
    Finite(f64),
    Unbounded(UnboundedToken),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnboundedToken {
    #[serde(rename = "inf")]
    Inf,
}

impl Extended {
    pub const UNBOUNDED: Extended = Extended::Unbounded(UnboundedToken::Inf);

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Unbounded(_) => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Extended::Unbounded(_))
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Unbounded(_) => f.write_str("inf"),
        }
    }
}
