use crate::error::{param, Error, Result};

const MAX_TERMS: usize = 200_000;

/// Below this argument the Pfaff route converges faster than the direct series.
const PFAFF_SWITCH: f64 = -0.5;

/// Gauss hypergeometric function ₂F₁(a, b; c; z) for real z ≤ 0.
///
/// Direct power series on (−0.5, 0]; for z ≤ −0.5 the Pfaff transformation
/// ₂F₁(a,b;c;z) = (1−z)^{−a} ₂F₁(a, c−b; c; z/(z−1)) maps the argument into
/// [1/3, 1), where the series converges for every z.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    check_c(c)?;
    if !(z <= 0.0) || !z.is_finite() {
        return param(format!("2F1 is only evaluated for finite z <= 0, got {z}"));
    }
    if z > PFAFF_SWITCH {
        gauss_2f1_series(a, b, c, z)
    } else {
        gauss_2f1_pfaff(a, b, c, z)
    }
}

/// Plain hypergeometric series, valid for |z| < 1.
pub fn gauss_2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    check_c(c)?;
    if !(z.abs() < 1.0) {
        return param(format!("2F1 series requires |z| < 1, got {z}"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // two consecutive negligible terms guards against a lucky near-zero term
        if term.abs() <= 1e-17 * sum.abs() {
            small += 1;
            if small >= 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Numeric {
        what: "2F1 series",
        detail: format!("a={a}, b={b}, c={c}, z={z} after {MAX_TERMS} terms"),
        best: Some(sum),
    })
}

/// Pfaff-transformed evaluation, valid for z < 1/2 (so the mapped argument
/// z/(z−1) stays inside the unit disc).
pub fn gauss_2f1_pfaff(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    check_c(c)?;
    if !(z < 0.5) {
        return param(format!("Pfaff route requires z < 1/2, got {z}"));
    }
    let w = z / (z - 1.0);
    Ok((1.0 - z).powf(-a) * gauss_2f1_series(a, c - b, c, w)?)
}

fn check_c(c: f64) -> Result<()> {
    if !c.is_finite() || (c <= 0.0 && c.fract() == 0.0) {
        return param(format!("2F1 undefined for c = {c}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn identities() {
        assert_eq!(gauss_2f1(1.0, 1.0, 2.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(gauss_2f1(1.0, 1.0, 2.0, -1.0).unwrap(), 2f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(
            gauss_2f1(0.5, 1.0, 1.5, -1.0).unwrap(),
            std::f64::consts::FRAC_PI_4,
            epsilon = 1e-13
        );
    }

    #[test]
    fn large_negative_argument() {
        // 2F1(1,1;2;z) = -ln(1-z)/z
        for z in [-3.162_277_660_168_379_5f64, -10.0, -100.0] {
            let expect = -(1.0 - z).ln() / z;
            assert_abs_diff_eq!(gauss_2f1(1.0, 1.0, 2.0, z).unwrap(), expect, epsilon = 1e-12);
        }
        // 2F1(1/2,1;3/2;-x^2) = atan(x)/x
        for x in [2.0f64, 5.0] {
            assert_abs_diff_eq!(gauss_2f1(0.5, 1.0, 1.5, -x * x).unwrap(), x.atan() / x, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(gauss_2f1(1.0, 1.0, 0.0, -0.5).is_err());
        assert!(gauss_2f1(1.0, 1.0, -2.0, -0.5).is_err());
        assert!(gauss_2f1(1.0, 1.0, 2.0, 0.5).is_err());
        assert!(gauss_2f1_series(1.0, 1.0, 2.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn routes_agree_on_overlap(z in -0.999f64..-0.5, n in 1u32..4, eta in 2.1f64..6.0) {
            let delta = 2.0 / eta;
            let (a, b, c) = (n as f64, n as f64 - delta, n as f64 + 1.0 - delta);
            let s = gauss_2f1_series(a, b, c, z).unwrap();
            let p = gauss_2f1_pfaff(a, b, c, z).unwrap();
            prop_assert!((s - p).abs() < 1e-8, "series {} vs pfaff {}", s, p);
        }
    }
}
