use super::gamma::ln_gamma;
use crate::error::{param, Error, Result};

const MAX_ITER: usize = 10_000;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function I_x(a, b).
///
/// Evaluated with the Lentz continued fraction on whichever of `x` and `1-x`
/// lies below the `(a+1)/(a+b+2)` crossover, so the fraction always converges
/// quickly.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return param(format!("incomplete beta requires a, b > 0, got a={a}, b={b}"));
    }
    if !(0.0..=1.0).contains(&x) {
        return param(format!("incomplete beta requires x in [0,1], got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok((ln_front.exp() * beta_cf(x, a, b)? / a).clamp(0.0, 1.0))
    } else {
        Ok((1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a)? / b).clamp(0.0, 1.0))
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 2.0 * f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::Numeric {
        what: "incomplete beta continued fraction",
        detail: format!("x={x}, a={a}, b={b}"),
        best: Some(h),
    })
}
