use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Tolerances and limits for the adaptive Gauss–Kronrod integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// On semi-infinite ranges, points mapped beyond this abscissa contribute
    /// zero. Keeps integrands that underflow to `0 * inf` from poisoning the sum.
    pub semi_infinite_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2_000,
            semi_infinite_cutoff: 1e12,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return param("quadrature tolerances must be strictly positive");
        }
        if self.max_subdivisions == 0 {
            return param("max_subdivisions must be at least 1");
        }
        if !(self.semi_infinite_cutoff > 0.0) {
            return param("semi_infinite_cutoff must be positive");
        }
        Ok(())
    }
}

/// An integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

// 21-point Kronrod nodes on [0, 1] (symmetric) and the embedded 10-point
// Gauss weights for the odd-indexed nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_752_811_253_570,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut resabs = kronrod.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        let pair = fv1[j] + fv2[j];
        kronrod += WGK[j] * pair;
        resabs += WGK[j] * (fv1[j].abs() + fv2[j].abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    resabs *= half.abs();
    resasc *= half.abs();
    // QUADPACK's scaling of the Gauss/Kronrod difference
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive 21-point Gauss–Kronrod integration of `f` over the finite range
/// `[a, b]`, always bisecting the segment with the largest error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    if !a.is_finite() || !b.is_finite() {
        return param("integrate requires finite limits; use integrate_semi_infinite");
    }
    if a == b {
        return Ok(Integral { value: 0.0, abs_error: 0.0, subdivisions: 0 });
    }
    let (value, err) = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    let mut subdivisions = 1;
    loop {
        if !total.is_finite() {
            return Err(Error::Numeric {
                what: "adaptive quadrature",
                detail: "integrand produced a non-finite value".into(),
                best: None,
            });
        }
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(Integral { value: total, abs_error: total_err, subdivisions });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Numeric {
                what: "adaptive quadrature",
                detail: format!(
                    "error estimate {total_err:e} after {subdivisions} subdivisions on [{a}, {b}]"
                ),
                best: Some(total),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            return Err(Error::Numeric {
                what: "adaptive quadrature",
                detail: format!("segment [{}, {}] exhausted floating-point resolution", worst.a, worst.b),
                best: Some(total),
            });
        }
        let (lv, le) = gk21(&f, worst.a, mid);
        let (rv, re) = gk21(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, err: re });
        subdivisions += 1;
        // running sums drift; refresh occasionally
        if subdivisions % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
}

/// ∫_lower^∞ f(t) dt via the substitution t = lower + (1−u)/u on u ∈ (0, 1].
///
/// This is the u/(1−u) map reflected about u = ½: the infinite end sits at
/// u = 0, where u carries full relative precision, instead of at u = 1 where
/// forming 1 − u cancels.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if !lower.is_finite() {
        return param("semi-infinite integration needs a finite lower limit");
    }
    let cutoff = spec.semi_infinite_cutoff;
    let mapped = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let t = (1.0 - u) / u;
        if t > cutoff {
            return 0.0;
        }
        f(lower + t) / (u * u)
    };
    integrate(mapped, 0.0, 1.0, spec)
}
