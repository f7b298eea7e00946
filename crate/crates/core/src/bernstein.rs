//! Bernstein polynomial basis and non-negative rate functions built on it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::RandomSource;

/// Highest supported degree; binomials stay exact well past this.
pub const MAX_DEGREE: usize = 20;

/// Slack allowed when a time sits a rounding error outside the span.
const SPAN_SLACK: f64 = 1e-9;

/// `C(n, k)` by the multiplicative recurrence.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc as f64
}

/// `b_{j,n}(t) = C(n,j) t^j (1−t)^{n−j}` on `t ∈ [0, 1]`.
pub fn basis_eval(j: usize, n: usize, t: f64) -> Result<f64> {
    if j > n {
        return Err(Error::OutOfRange(format!("basis index {j} > degree {n}")));
    }
    if n > MAX_DEGREE {
        return Err(Error::OutOfRange(format!(
            "degree {n} exceeds cap {MAX_DEGREE}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("t = {t} outside [0, 1]")));
    }
    Ok(basis_unchecked(j, n, t))
}

fn basis_unchecked(j: usize, n: usize, t: f64) -> f64 {
    binomial(n, j) * t.powi(j as i32) * (1.0 - t).powi((n - j) as i32)
}

/// `γ(t) = Σ_j a_j b_{j,n}(τ)`, with `τ` the affine image of `t` from
/// `t_span` onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateRepr", into = "RateRepr")]
pub struct BernsteinRate {
    coeffs: Vec<f64>,
    t_span: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct RateRepr {
    degree: usize,
    coeffs: Vec<f64>,
    t_span: [f64; 2],
}

impl TryFrom<RateRepr> for BernsteinRate {
    type Error = Error;

    fn try_from(r: RateRepr) -> Result<Self> {
        if r.coeffs.len() != r.degree + 1 {
            return Err(Error::Schema(format!(
                "degree {} needs {} coefficients, got {}",
                r.degree,
                r.degree + 1,
                r.coeffs.len()
            )));
        }
        BernsteinRate::new(r.coeffs, r.t_span)
    }
}

impl From<BernsteinRate> for RateRepr {
    fn from(r: BernsteinRate) -> Self {
        RateRepr {
            degree: r.degree(),
            coeffs: r.coeffs,
            t_span: r.t_span,
        }
    }
}

impl BernsteinRate {
    pub fn new(coeffs: Vec<f64>, t_span: [f64; 2]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::OutOfRange(format!(
                "need 1..={} coefficients, got {}",
                MAX_DEGREE + 1,
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "Bernstein coefficients must be finite and non-negative, got {bad}"
            )));
        }
        if !(t_span[1] > t_span[0]) || !t_span[0].is_finite() || !t_span[1].is_finite() {
            return Err(Error::OutOfRange(format!(
                "invalid time span [{}, {}]",
                t_span[0], t_span[1]
            )));
        }
        Ok(Self { coeffs, t_span })
    }

    /// Degree-0 rate, i.e. a constant `γ`.
    pub fn constant(gamma: f64, t_span: [f64; 2]) -> Result<Self> {
        Self::new(vec![gamma], t_span)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn t_span(&self) -> [f64; 2] {
        self.t_span
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// Same function with every coefficient multiplied by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|a| a * factor).collect(), self.t_span)
    }

    fn to_unit(&self, t: f64) -> Result<f64> {
        let [t0, t1] = self.t_span;
        let tau = (t - t0) / (t1 - t0);
        if !(-SPAN_SLACK..=1.0 + SPAN_SLACK).contains(&tau) {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside rate span [{t0}, {t1}]"
            )));
        }
        Ok(tau.clamp(0.0, 1.0))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let tau = self.to_unit(t)?;
        Ok(self.eval_unit(tau))
    }

    fn eval_unit(&self, tau: f64) -> f64 {
        if self.coeffs.len() == 1 {
            return self.coeffs[0];
        }
        let n = self.degree();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, a)| a * basis_unchecked(j, n, tau))
            .sum()
    }
}

/// Evaluates `r` at `t`; `t` must lie in the rate's span.
pub fn rate_eval(r: &BernsteinRate, t: f64) -> Result<f64> {
    r.eval(t)
}

/// Degree-`n` rate with coefficients i.i.d. uniform on `(lo, hi)`.
pub fn sample_rate(
    n: usize,
    lo: f64,
    hi: f64,
    t_span: [f64; 2],
    rng: &mut RandomSource,
) -> Result<BernsteinRate> {
    if !(0.0 <= lo && lo < hi) {
        return Err(Error::OutOfRange(format!(
            "sampling interval ({lo}, {hi}) must satisfy 0 <= lo < hi"
        )));
    }
    let coeffs = (0..=n).map(|_| uniform_open(lo, hi, rng)).collect();
    BernsteinRate::new(coeffs, t_span)
}

/// Uniform draw on the open interval `(lo, hi)`.
pub(crate) fn uniform_open(lo: f64, hi: f64, rng: &mut RandomSource) -> f64 {
    loop {
        let x = rng.random_range(lo..hi);
        if x > lo {
            return x;
        }
    }
}
