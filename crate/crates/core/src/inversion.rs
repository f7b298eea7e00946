//! Closed-form recovery of dissipation rates from observable time series,
//! and Heisenberg-equation residuals for the Jaynes-Cummings model.
//!
//! All estimators work on interior grid points; the two endpoints are dropped.

use indexmap::IndexMap;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinRate;
use crate::error::{Error, Result};
use crate::models::{JC_AUX_EXCHANGE, JC_AUX_P_SZ};
use crate::sim::Trajectory;

/// Masking thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    /// Minimum `1 + ⟨σ_z⟩` (single channel) or `|ρ₀₁|` (two channels).
    pub min_denominator: f64,
    /// Maximum condition number of the two-channel linear system.
    pub max_condition: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            min_denominator: 1e-3,
            max_condition: 1e6,
        }
    }
}

/// Pointwise rate estimate on interior grid points. Invalid points hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl RateEstimate {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            valid: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, value: Option<f64>) {
        let value = value.filter(|v| v.is_finite());
        self.times.push(t);
        self.values.push(value.unwrap_or(f64::NAN));
        self.valid.push(value.is_some());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// `(t, value)` pairs of valid points.
    pub fn valid_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .map(|((t, v), _)| (*t, *v))
    }

    /// Largest relative deviation from `truth(t)` over valid points.
    pub fn max_relative_error(&self, truth: impl Fn(f64) -> f64) -> Option<f64> {
        self.valid_points()
            .map(|(t, v)| {
                let r = truth(t);
                (v - r).abs() / r.abs()
            })
            .reduce(f64::max)
    }
}

fn check_lengths(times: &[f64], series: &[&[f64]]) -> Result<()> {
    if times.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "inversion needs at least 3 points, got {}",
            times.len()
        )));
    }
    for s in series {
        if s.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: s.len(),
            });
        }
    }
    Ok(())
}

/// Central difference at interior index `k`.
fn central(x: &[f64], times: &[f64], k: usize) -> f64 {
    (x[k + 1] - x[k - 1]) / (times[k + 1] - times[k - 1])
}

/// Single decay channel: `γ(t) = −(d⟨σ_z⟩/dt) / (1 + ⟨σ_z⟩)`.
pub fn invert_theorem1(sz: &[f64], times: &[f64], cfg: &InversionConfig) -> Result<RateEstimate> {
    check_lengths(times, &[sz])?;
    let mut est = RateEstimate::with_capacity(times.len() - 2);
    for k in 1..times.len() - 1 {
        let denom = 1.0 + sz[k];
        let value = (denom >= cfg.min_denominator).then(|| -central(sz, times, k) / denom);
        est.push(times[k], value);
    }
    Ok(est)
}

/// Result of the two-channel inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoChannelEstimate {
    pub gamma_plus: RateEstimate,
    pub gamma_minus: RateEstimate,
    /// `γ₊ + γ₋` from coherence decay.
    pub rate_sum: RateEstimate,
    /// `γ₋` from the closed-form rational expression (real part).
    pub gamma_minus_closed_form: RateEstimate,
    /// True when no point had usable coherence, so the pair is not
    /// identifiable and only the `σ_z` relation is available.
    pub underdetermined: bool,
    /// `γ₊(1−z) − γ₋(1+z)` from `d⟨σ_z⟩/dt`; always available.
    pub sz_relation: Vec<f64>,
}

/// 2-norm condition number of `[[a, b], [c, d]]`.
fn condition_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let fro2 = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    if det == 0.0 {
        return f64::INFINITY;
    }
    // σ_max/σ_min from σ_max² + σ_min² = ‖A‖_F², σ_max σ_min = |det|
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let smax2 = 0.5 * (fro2 + disc);
    smax2 / det
}

/// Two channels (`σ₊`, `σ₋`) under `H = σ_z`.
///
/// The coherence `ρ₀₁ = (⟨σ_x⟩ − i⟨σ_y⟩)/2` decays as `|ρ₀₁| ∝ e^{−∫s/2}`
/// with `s = γ₊ + γ₋`; `s` comes from the central difference of `ln|ρ₀₁|`.
/// The population relation `d⟨σ_z⟩/dt = γ₊(1−z) − γ₋(1+z)` then closes the
/// 2×2 system. Its left side uses a central difference fitted to the local
/// relaxation `z → (γ₊−γ₋)/s` at rate `s`, which is exact for constant
/// rates and second order otherwise.
pub fn invert_theorem2(
    sx: &[f64],
    sy: &[f64],
    sz: &[f64],
    times: &[f64],
    cfg: &InversionConfig,
) -> Result<TwoChannelEstimate> {
    check_lengths(times, &[sx, sy, sz])?;
    let n = times.len() - 2;
    let coherence: Vec<f64> = sx.iter().zip(sy).map(|(x, y)| 0.5 * x.hypot(*y)).collect();
    let log_coh: Vec<f64> = coherence.iter().map(|c| c.ln()).collect();

    let mut gamma_plus = RateEstimate::with_capacity(n);
    let mut gamma_minus = RateEstimate::with_capacity(n);
    let mut rate_sum = RateEstimate::with_capacity(n);
    let mut closed = RateEstimate::with_capacity(n);
    let mut sz_relation = Vec::with_capacity(n);

    for k in 1..times.len() - 1 {
        let t = times[k];
        let z = sz[k];
        sz_relation.push(central(sz, times, k));

        let usable = (k - 1..=k + 1).all(|j| coherence[j] >= cfg.min_denominator);
        if !usable {
            for est in [&mut gamma_plus, &mut gamma_minus, &mut rate_sum, &mut closed] {
                est.push(t, None);
            }
            continue;
        }
        let s = -2.0 * central(&log_coh, times, k);
        rate_sum.push(t, Some(s));

        let dz = fitted_derivative(sz, times, k, s);
        // [1−z, −(1+z); 1, 1] (γ₊, γ₋)ᵀ = (ż, s)ᵀ
        let (a, b, c, d) = (1.0 - z, -(1.0 + z), 1.0, 1.0);
        let solution = (condition_2x2(a, b, c, d) <= cfg.max_condition).then(|| {
            let det = a * d - b * c;
            ((dz * d - b * s) / det, (a * s - c * dz) / det)
        });
        gamma_plus.push(t, solution.map(|g| g.0));
        gamma_minus.push(t, solution.map(|g| g.1));

        let xdot = central(sx, times, k);
        let ydot = central(sy, times, k);
        let zdot = central(sz, times, k);
        closed.push(
            t,
            Some(gamma_minus_closed_form(sx[k], sy[k], z, xdot, ydot, zdot)),
        );
    }

    let underdetermined = rate_sum.valid_count() == 0;
    Ok(TwoChannelEstimate {
        gamma_plus,
        gamma_minus,
        rate_sum,
        gamma_minus_closed_form: closed,
        underdetermined,
        sz_relation,
    })
}

/// Derivative of `z` at `k` assuming local relaxation `ż = d − s·z`.
fn fitted_derivative(z: &[f64], times: &[f64], k: usize, s: f64) -> f64 {
    let h = 0.5 * (times[k + 1] - times[k - 1]);
    let x = 2.0 * s * h;
    if x.abs() < 1e-6 {
        return central(z, times, k);
    }
    let decay = (-x).exp();
    let drive = s * (z[k + 1] - z[k - 1] * decay) / (1.0 - decay);
    drive - s * z[k]
}

/// Real part of the rational closed form for `γ₋` in terms of `⟨σ_{x,y,z}⟩`
/// and their time derivatives. It coincides with `γ₋` when `γ₊ = 0`.
pub fn gamma_minus_closed_form(x: f64, y: f64, z: f64, xdot: f64, ydot: f64, zdot: f64) -> f64 {
    let i = C64::i();
    let num = 4.0 * x * z - i * x * zdot - 4.0 * i * y * z - y * zdot - 2.0 * i * z * xdot
        - 2.0 * z * ydot
        - 6.0 * i * xdot
        - 6.0 * ydot;
    let den = 2.0 * i * x * z + 4.0 * i * x + 2.0 * y * z + 4.0 * y;
    (num / den).re
}

/// Hamiltonian parameters of a JC instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcParams {
    pub omega_c: f64,
    pub omega_q: f64,
    pub g: f64,
}

impl JcParams {
    pub fn from_map(params: &IndexMap<String, f64>) -> Result<Self> {
        let get = |k: &str| {
            params
                .get(k)
                .copied()
                .ok_or_else(|| Error::Schema(format!("missing JC parameter `{k}`")))
        };
        Ok(Self {
            omega_c: get("omega_c")?,
            omega_q: get("omega_q")?,
            g: get("g")?,
        })
    }
}

/// Qubit-cavity cross terms that the five recorded observables do not fix:
/// `P = ⟨i(a − a†)σ_z⟩` and `E = ⟨i(aσ₊ − a†σ₋)⟩`.
#[derive(Debug, Clone, Copy)]
pub struct JcCrossTerms<'a> {
    pub p_sz: &'a [f64],
    pub exchange: &'a [f64],
}

impl<'a> JcCrossTerms<'a> {
    /// Reads the auxiliary series recorded alongside a trajectory.
    pub fn from_trajectory(traj: &'a Trajectory) -> Result<Self> {
        Ok(Self {
            p_sz: traj.series(JC_AUX_P_SZ)?,
            exchange: traj.series(JC_AUX_EXCHANGE)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub rms: f64,
}

impl ResidualStats {
    fn of(r: &[f64]) -> Self {
        let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rms = (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt();
        Self { max, rms }
    }
}

/// Per-equation residual norms, keyed by the differentiated observable.
///
/// With cross terms: `sx`, `sy`, `sz`, `n_phot`. Without them only the
/// closed equations are available: `sy` and the combination `sz+2n_phot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcResiduals {
    pub equations: IndexMap<String, ResidualStats>,
}

impl JcResiduals {
    pub fn get(&self, name: &str) -> Result<ResidualStats> {
        self.equations
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingSeries(name.to_string()))
    }

    pub fn max(&self) -> f64 {
        self.equations.values().fold(0.0, |m, s| m.max(s.max))
    }
}

/// Residuals of the JC Heisenberg equations
///
/// ```text
/// d⟨σ_x⟩/dt = −ω_q⟨σ_y⟩ + g·P − (γ/2)⟨σ_x⟩
/// d⟨σ_y⟩/dt =  ω_q⟨σ_x⟩ − √2·g⟨X σ_z⟩ − (γ/2)⟨σ_y⟩
/// d⟨σ_z⟩/dt = −2g·E − γ(1 + ⟨σ_z⟩)
/// d⟨a†a⟩/dt =  g·E − κ⟨a†a⟩
/// ```
///
/// with finite-difference left sides on interior points.
pub fn jc_residuals(
    traj: &Trajectory,
    params: JcParams,
    gamma: &BernsteinRate,
    kappa: &BernsteinRate,
    cross: Option<JcCrossTerms<'_>>,
) -> Result<JcResiduals> {
    let t = &traj.times;
    let sx = traj.series("sx")?;
    let sy = traj.series("sy")?;
    let sz = traj.series("sz")?;
    let n = traj.series("n_phot")?;
    let x_sz = traj.series("x_sz")?;
    check_lengths(t, &[sx, sy, sz, n, x_sz])?;
    if let Some(c) = cross {
        check_lengths(t, &[c.p_sz, c.exchange])?;
    }
    let JcParams { omega_q, g, .. } = params;
    let q_coeff = std::f64::consts::SQRT_2 * g;

    let mut res: IndexMap<&str, Vec<f64>> = IndexMap::new();
    for k in 1..t.len() - 1 {
        let gm = gamma.eval(t[k])?;
        let kp = kappa.eval(t[k])?;
        let dy = central(sy, t, k);
        let y_rhs = omega_q * sx[k] - q_coeff * x_sz[k] - 0.5 * gm * sy[k];
        match cross {
            Some(c) => {
                let e = c.exchange[k];
                let x_rhs = -omega_q * sy[k] + g * c.p_sz[k] - 0.5 * gm * sx[k];
                let z_rhs = -2.0 * g * e - gm * (1.0 + sz[k]);
                let n_rhs = g * e - kp * n[k];
                res.entry("sx").or_default().push(central(sx, t, k) - x_rhs);
                res.entry("sy").or_default().push(dy - y_rhs);
                res.entry("sz").or_default().push(central(sz, t, k) - z_rhs);
                res.entry("n_phot").or_default().push(central(n, t, k) - n_rhs);
            }
            None => {
                let lhs = central(sz, t, k) + 2.0 * central(n, t, k);
                let rhs = -gm * (1.0 + sz[k]) - 2.0 * kp * n[k];
                res.entry("sy").or_default().push(dy - y_rhs);
                res.entry("sz+2n_phot").or_default().push(lhs - rhs);
            }
        }
    }
    Ok(JcResiduals {
        equations: res
            .into_iter()
            .map(|(k, v)| (k.to_string(), ResidualStats::of(&v)))
            .collect(),
    })
}

/// Pointwise JC rate estimates from the five recorded observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcRateEstimate {
    pub gamma: RateEstimate,
    pub kappa: RateEstimate,
}

/// Recovers `γ(t)` from the `σ_y` equation and then `κ(t)` from
/// `ż + 2ṅ = −γ(1+z) − 2κn`, both of which close on the recorded series.
/// Points with `|⟨σ_y⟩|` or `⟨a†a⟩` below `min_denominator` are masked.
pub fn invert_jc(traj: &Trajectory, params: JcParams, cfg: &InversionConfig) -> Result<JcRateEstimate> {
    let t = &traj.times;
    let sx = traj.series("sx")?;
    let sy = traj.series("sy")?;
    let sz = traj.series("sz")?;
    let n = traj.series("n_phot")?;
    let x_sz = traj.series("x_sz")?;
    check_lengths(t, &[sx, sy, sz, n, x_sz])?;
    let q_coeff = std::f64::consts::SQRT_2 * params.g;

    let mut gamma = RateEstimate::with_capacity(t.len() - 2);
    let mut kappa = RateEstimate::with_capacity(t.len() - 2);
    for k in 1..t.len() - 1 {
        let g = (sy[k].abs() >= cfg.min_denominator).then(|| {
            2.0 * (params.omega_q * sx[k] - q_coeff * x_sz[k] - central(sy, t, k)) / sy[k]
        });
        let kp = g.filter(|_| n[k] >= cfg.min_denominator).map(|g| {
            let lhs = central(sz, t, k) + 2.0 * central(n, t, k);
            -(lhs + g * (1.0 + sz[k])) / (2.0 * n[k])
        });
        gamma.push(t[k], g);
        kappa.push(t[k], kp);
    }
    Ok(JcRateEstimate { gamma, kappa })
}
