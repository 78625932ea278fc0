//! Success-probability moments, the beta-approximated meta distribution, and
//! its quantization into equiprobable QoS classes.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::specfun::{
    gauss_2f1, integrate, integrate_semi_infinite, ln_gamma, lower_inc_gamma, reg_inc_beta,
    QuadratureSpec,
};

/// Variance at or below which the meta distribution is treated as a point mass.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Default bisection tolerance, on the CDF scale.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-9;
const MAX_BISECTION_ITERS: usize = 200;

/// How interferer activity enters the conditional success probability.
///
/// `PerSlot` averages each interferer's busy/idle state independently per
/// transmission, so the busy probability 1−χ is raised to the n-th power in
/// the n-th summand of the moment expansion. `Frozen` treats the busy/idle
/// state as part of the conditioning, so 1−χ enters linearly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivityModel {
    #[default]
    PerSlot,
    Frozen,
}

/// Link-level parameters shared by every class; everything but χ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// SIR decoding threshold, linear.
    pub theta: f64,
    /// Path-loss exponent.
    pub eta: f64,
    /// Power-control compensation factor.
    pub eps: f64,
    pub activity: ActivityModel,
}

impl LinkParams {
    pub fn new(theta: f64, eta: f64, eps: f64) -> Result<Self> {
        let p = Self { theta, eta, eps, activity: ActivityModel::PerSlot };
        p.validate()?;
        Ok(p)
    }

    pub fn with_activity(mut self, activity: ActivityModel) -> Self {
        self.activity = activity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return param(format!("theta must be positive and finite, got {}", self.theta));
        }
        if !(self.eta > 2.0) || !self.eta.is_finite() {
            return param(format!("path-loss exponent must exceed 2, got {}", self.eta));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return param(format!("compensation factor must lie in (0, 1], got {}", self.eps));
        }
        Ok(())
    }

    pub fn at_idle(&self, chi: f64) -> Result<MacroParams> {
        MacroParams::new(*self, chi)
    }
}

/// [`LinkParams`] plus the spatially averaged idle probability χ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroParams {
    pub theta: f64,
    pub eta: f64,
    pub eps: f64,
    pub chi: f64,
    pub activity: ActivityModel,
}

impl MacroParams {
    pub fn new(link: LinkParams, chi: f64) -> Result<Self> {
        link.validate()?;
        if !(0.0..=1.0).contains(&chi) {
            return param(format!("idle probability must lie in [0, 1], got {chi}"));
        }
        Ok(Self {
            theta: link.theta,
            eta: link.eta,
            eps: link.eps,
            chi,
            activity: link.activity,
        })
    }

    pub fn link(&self) -> LinkParams {
        LinkParams {
            theta: self.theta,
            eta: self.eta,
            eps: self.eps,
            activity: self.activity,
        }
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.link(), self.chi).map(|_| ())
    }

    /// The bracket 1 − E[(per-interferer success factor)^b] as a function of
    /// the normalized interferer distance variable `y`.
    fn bracket(&self, b: u32, y: f64) -> f64 {
        // 1 − (1 − t)^b without cancellation for small t
        let one_minus_pow = |t: f64| -(f64::from(b) * (-t).ln_1p()).exp_m1();
        let busy = 1.0 - self.chi;
        match self.activity {
            ActivityModel::PerSlot => one_minus_pow(busy * self.theta / (y + self.theta)),
            ActivityModel::Frozen => busy * one_minus_pow(self.theta / (y + self.theta)),
        }
    }
}

/// First and second moments of the success probability, and the χ they were
/// computed under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaMoments {
    pub m1: f64,
    pub m2: f64,
    pub chi_used: f64,
}

impl MetaMoments {
    pub fn new(m1: f64, m2: f64, chi_used: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m1) {
            return param(format!("first moment outside [0,1]: {m1}"));
        }
        if !(m2 >= 0.0 && m2 <= m1 + 1e-12) {
            return param(format!("second moment {m2} must lie in [0, m1={m1}]"));
        }
        if m2 < m1 * m1 - 1e-9 {
            return param(format!("negative variance: m2={m2} < m1^2={}", m1 * m1));
        }
        Ok(Self { m1, m2, chi_used })
    }

    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }
}

/// b-th moment of the success probability under full path-loss inversion
/// (ε = 1), in closed form.
pub fn moment_closed_form(b: u32, p: &MacroParams) -> Result<f64> {
    p.validate()?;
    if b == 0 {
        return param("moment order must be at least 1");
    }
    if p.eps != 1.0 {
        return Err(Error::Unsupported(format!(
            "closed-form moments need eps = 1 (got {}); use moment_integral",
            p.eps
        )));
    }
    let delta = 2.0 / p.eta;
    let busy = 1.0 - p.chi;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for n in 1..=b {
        binom = binom * f64::from(b - n + 1) / f64::from(n);
        let nf = f64::from(n);
        let weight = match p.activity {
            ActivityModel::PerSlot => (busy * p.theta).powi(n as i32),
            ActivityModel::Frozen => busy * p.theta.powi(n as i32),
        };
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let hyp = gauss_2f1(nf, nf - delta, nf + 1.0 - delta, -p.theta)?;
        sum += binom * sign * weight / (nf - delta) * hyp;
    }
    Ok((-delta * sum).exp())
}

/// b-th moment of the success probability for fractional power control
/// (0 < ε < 1), by nested adaptive quadrature.
///
/// The inner variable is substituted as y = s^{η/2}, which absorbs the
/// y^{2/η−1} weight and the 2/η prefactor, leaving
/// `exp(-z - z^{1-ε} ∫₀^∞ bracket(s^{η/2}) γ(1+ε, z s^{1/(1-ε)}) ds)`
/// under the outer integral.
pub fn moment_integral(b: u32, p: &MacroParams, q: &QuadratureSpec) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if b == 0 {
        return param("moment order must be at least 1");
    }
    if p.eps >= 1.0 {
        return Err(Error::Unsupported(
            "the integral form is ill-posed at eps = 1; use moment_closed_form".into(),
        ));
    }
    let eps = p.eps;
    let power = 1.0 / (1.0 - eps);
    let half_eta = p.eta / 2.0;
    let gamma_full = ln_gamma(1.0 + eps).exp();
    let failure: RefCell<Option<Error>> = RefCell::new(None);

    let inc_gamma = |ln_arg: f64| -> f64 {
        if ln_arg > 700.0 {
            return gamma_full;
        }
        if ln_arg < -700.0 {
            return 0.0;
        }
        match lower_inc_gamma(1.0 + eps, ln_arg.exp()) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };

    let inner = |z: f64| -> f64 {
        let ln_z = z.ln();
        let integrand = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            p.bracket(b, s.powf(half_eta)) * inc_gamma(ln_z + power * s.ln())
        };
        // γ switches on around z s^{1/(1-ε)} = 1
        let knee = (-(1.0 - eps) * ln_z).exp();
        let head = integrate(integrand, 0.0, knee, q);
        let tail = integrate_semi_infinite(integrand, knee, q);
        match (head, tail) {
            (Ok(h), Ok(t)) => h.value + t.value,
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };

    let outer = |z: f64| -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        (-z - z.powf(1.0 - eps) * inner(z)).exp()
    };

    let result = integrate_semi_infinite(outer, 0.0, q);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(result?.value)
}

/// First two moments, choosing the closed form at ε = 1.
pub fn moments(p: &MacroParams, q: &QuadratureSpec) -> Result<MetaMoments> {
    let (m1, m2) = if p.eps == 1.0 {
        (moment_closed_form(1, p)?, moment_closed_form(2, p)?)
    } else {
        (moment_integral(1, p, q)?, moment_integral(2, p, q)?)
    };
    MetaMoments::new(m1, m2, p.chi)
}

/// The fitted meta distribution: a beta law matched to (M₁, M₂), or a point
/// mass when the variance vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetaDistribution {
    Beta { a: f64, b: f64 },
    PointMass { at: f64 },
}

impl MetaDistribution {
    pub fn from_moments(m: &MetaMoments) -> Self {
        let var = m.variance();
        if var <= DEGENERATE_VARIANCE {
            return MetaDistribution::PointMass { at: m.m1 };
        }
        let common = (m.m1 - m.m2) / var;
        let a = m.m1 * common;
        let b = (1.0 - m.m1) * common;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return MetaDistribution::PointMass { at: m.m1 };
        }
        MetaDistribution::Beta { a, b }
    }

    /// P(P_s ≤ x).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        match *self {
            MetaDistribution::Beta { a, b } => reg_inc_beta(x.clamp(0.0, 1.0), a, b),
            MetaDistribution::PointMass { at } => Ok(if x >= at { 1.0 } else { 0.0 }),
        }
    }

    /// P(P_s > x).
    pub fn ccdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.cdf(x)?)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MetaDistribution::Beta { a, b } => a / (a + b),
            MetaDistribution::PointMass { at } => at,
        }
    }
}

/// Complementary CDF of the meta distribution at `delta`.
///
/// Returns [`Error::Degenerate`] when the moments describe a point mass; the
/// caller decides how to treat it.
pub fn meta_ccdf(delta: f64, m: &MetaMoments) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return param(format!("delta must lie in [0, 1], got {delta}"));
    }
    match MetaDistribution::from_moments(m) {
        MetaDistribution::PointMass { .. } => Err(Error::Degenerate { m1: m.m1 }),
        dist => dist.ccdf(delta),
    }
}

/// N equiprobable QoS classes of the meta distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoSClassTable {
    pub n_classes: usize,
    /// Representative success probability of each class, ascending.
    pub d: Vec<f64>,
    /// Class boundaries ω₁ = 0 < … < ω_{N+1} = 1.
    pub boundaries: Vec<f64>,
    /// Set when the distribution is a point mass; all `d` coincide and the
    /// interior boundaries collapse onto it.
    pub degenerate: bool,
}

/// Quantize the meta distribution fitted to `m` into `n_classes` classes of
/// mass 1/N each; every class representative splits its class's mass in two
/// equal halves.
pub fn quantize(n_classes: usize, m: &MetaMoments, tol: f64) -> Result<QoSClassTable> {
    if n_classes == 0 {
        return param("need at least one QoS class");
    }
    if !(tol > 0.0) {
        return param("bisection tolerance must be positive");
    }
    let dist = MetaDistribution::from_moments(m);
    if let MetaDistribution::PointMass { at } = dist {
        let mut boundaries = vec![at; n_classes + 1];
        boundaries[0] = 0.0;
        boundaries[n_classes] = 1.0;
        return Ok(QoSClassTable {
            n_classes,
            d: vec![at; n_classes],
            boundaries,
            degenerate: true,
        });
    }

    let n = n_classes as f64;
    let mut boundaries = Vec::with_capacity(n_classes + 1);
    boundaries.push(0.0);
    for k in 1..n_classes {
        let lo = *boundaries.last().expect("non-empty");
        boundaries.push(bisect_cdf(&dist, k as f64 / n, lo, 1.0, tol)?);
    }
    boundaries.push(1.0);

    let mut d = Vec::with_capacity(n_classes);
    for w in boundaries.windows(2) {
        let target = 0.5 * (dist.cdf(w[0])? + dist.cdf(w[1])?);
        d.push(bisect_cdf(&dist, target, w[0], w[1], tol)?);
    }
    Ok(QoSClassTable { n_classes, d, boundaries, degenerate: false })
}

fn bisect_cdf(dist: &MetaDistribution, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTION_ITERS {
        mid = 0.5 * (lo + hi);
        let f = dist.cdf(mid)?;
        if (f - target).abs() <= tol {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            // lo and hi are adjacent floats: the target quantile is as
            // resolved as f64 allows.
            let (f_lo, f_hi) = (dist.cdf(lo)?, dist.cdf(hi)?);
            return Ok(if target - f_lo <= f_hi - target { lo } else { hi });
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric {
        what: "quantization bisection",
        detail: format!("target CDF {target} not reached; bracket [{lo}, {hi}]"),
        best: Some(mid),
    })
}
