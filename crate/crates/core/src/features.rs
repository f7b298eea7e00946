//! Handcrafted per-series features and z-score standardization.
//!
//! Feature order (the first ten form the short set):
//!
//! | idx | feature |
//! |-----|---------|
//! | 0 | mean |
//! | 1 | standard deviation (population) |
//! | 2 | max |
//! | 3 | min |
//! | 4 | median |
//! | 5 | 25th percentile |
//! | 6 | 75th percentile |
//! | 7 | range |
//! | 8 | interquartile range |
//! | 9 | least-squares slope against time |
//! | 10 | mean of first differences |
//! | 11 | std of first differences |
//! | 12 | mean of second differences |
//! | 13 | std of second differences |
//! | 14 | skewness (population) |
//! | 15 | excess kurtosis (population) |
//! | 16 | max DFT magnitude, bins `1..=M/2` |
//! | 17 | mean DFT magnitude, bins `1..=M/2` |
//!
//! Percentiles interpolate linearly between closest ranks. Degenerate
//! (zero-variance) series have skewness and kurtosis 0.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleRecord;
use crate::error::{Error, Result};
use crate::jsonfmt;

pub const FEATURE_NAMES: [&str; 18] = [
    "mean", "std", "max", "min", "median", "p25", "p75", "range", "iqr", "slope", "diff_mean",
    "diff_std", "diff2_mean", "diff2_std", "skewness", "kurtosis", "fft_max", "fft_mean",
];

/// Variance below `VARIANCE_FLOOR · max(1, mean²)` counts as zero.
const VARIANCE_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "f18")]
    F18,
    #[serde(rename = "f10")]
    F10,
}

impl FeatureSet {
    pub fn per_channel(self) -> usize {
        match self {
            FeatureSet::F18 => 18,
            FeatureSet::F10 => 10,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::F18 => "f18",
            FeatureSet::F10 => "f10",
        }
    }

    pub fn extract(self, x: &[f64], dt: f64) -> Result<Vec<f64>> {
        match self {
            FeatureSet::F18 => features18(x, dt).map(|f| f.to_vec()),
            FeatureSet::F10 => features10(x, dt).map(|f| f.to_vec()),
        }
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f18" => Ok(FeatureSet::F18),
            "f10" => Ok(FeatureSet::F10),
            other => Err(Error::OutOfRange(format!("unknown feature set `{other}`"))),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance, clamped to zero for numerically constant input.
fn variance(x: &[f64], m: f64) -> f64 {
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64;
    if v <= VARIANCE_FLOOR * m.powi(2).max(1.0) {
        0.0
    } else {
        v
    }
}

fn std_dev(x: &[f64]) -> f64 {
    variance(x, mean(x)).sqrt()
}

/// Linear-interpolation percentile of sorted data, `q ∈ [0, 1]`.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn check_series(x: &[f64], min_len: usize, dt: f64) -> Result<()> {
    if x.len() < min_len {
        return Err(Error::InsufficientData(format!(
            "series of length {} (need at least {min_len})",
            x.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::OutOfRange(format!("time step {dt} must be positive")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("series contains non-finite values".into()));
    }
    Ok(())
}

fn basic(x: &[f64], dt: f64) -> [f64; 10] {
    let m = mean(x);
    let sd = variance(x, m).sqrt();
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let p25 = percentile_sorted(&sorted, 0.25);
    let median = percentile_sorted(&sorted, 0.5);
    let p75 = percentile_sorted(&sorted, 0.75);

    // least squares on (k·dt, x_k)
    let n = x.len() as f64;
    let t_mean = dt * (n - 1.0) / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        let dtk = k as f64 * dt - t_mean;
        sxy += dtk * (v - m);
        sxx += dtk * dtk;
    }
    let slope = if sd == 0.0 { 0.0 } else { sxy / sxx };

    [m, sd, max, min, median, p25, p75, max - min, p75 - p25, slope]
}

/// The ten-feature set: the first ten entries of [`features18`].
pub fn features10(x: &[f64], dt: f64) -> Result<[f64; 10]> {
    check_series(x, 2, dt)?;
    Ok(basic(x, dt))
}

/// The eighteen-feature set; see the module docs for the order.
pub fn features18(x: &[f64], dt: f64) -> Result<[f64; 18]> {
    check_series(x, 4, dt)?;
    let b = basic(x, dt);
    let d1 = diff(x);
    let d2 = diff(&d1);

    let m = b[0];
    let var = b[1] * b[1];
    let (skew, kurt) = if var == 0.0 {
        (0.0, 0.0)
    } else {
        let n = x.len() as f64;
        let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
        let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
        (m3 / var.powf(1.5), m4 / (var * var) - 3.0)
    };

    let (fft_max, fft_mean) = spectrum_stats(x);

    let mut out = [0.0; 18];
    out[..10].copy_from_slice(&b);
    out[10] = mean(&d1);
    out[11] = std_dev(&d1);
    out[12] = mean(&d2);
    out[13] = std_dev(&d2);
    out[14] = skew;
    out[15] = kurt;
    out[16] = fft_max;
    out[17] = fft_mean;
    Ok(out)
}

/// Max and mean magnitude of the unnormalized forward DFT over bins
/// `1..=⌊M/2⌋`, computed on the raw series.
fn spectrum_stats(x: &[f64]) -> (f64, f64) {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let bins = &buf[1..=x.len() / 2];
    let mags: Vec<f64> = bins.iter().map(|z| z.norm()).collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    (max, mean(&mags))
}

/// Concatenates per-channel features in channel-major order.
pub fn extract_channels(channels: &[&[f64]], dt: f64, set: FeatureSet) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(channels.len() * set.per_channel());
    for ch in channels {
        out.extend(set.extract(ch, dt)?);
    }
    Ok(out)
}

/// One line of a feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub sample_id: u64,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

impl FeatureRecord {
    /// Features of a sample's observables, in the model's channel order.
    pub fn from_sample(rec: &SampleRecord, set: FeatureSet) -> Result<Self> {
        let channels = rec
            .model
            .observable_names()
            .iter()
            .map(|name| rec.series(name))
            .collect::<Result<Vec<_>>>()?;
        if rec.times.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "sample {} has {} time points",
                rec.sample_id,
                rec.times.len()
            )));
        }
        let dt = rec.times[1] - rec.times[0];
        Ok(Self {
            sample_id: rec.sample_id,
            features: extract_channels(&channels, dt, set)?,
            targets: rec.target_values(),
        })
    }
}

pub fn write_feature_jsonl(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        writeln!(w, "{}", jsonfmt::to_line(rec)?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a feature file; all rows must share feature and target widths.
pub fn read_feature_jsonl(path: &Path) -> Result<Vec<FeatureRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<FeatureRecord> = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FeatureRecord = serde_json::from_str(&line)?;
        if let Some(first) = out.first() {
            if rec.features.len() != first.features.len() || rec.targets.len() != first.targets.len() {
                return Err(Error::Schema(format!(
                    "sample {}: row widths ({}, {}) differ from ({}, {})",
                    rec.sample_id,
                    rec.features.len(),
                    rec.targets.len(),
                    first.features.len(),
                    first.targets.len()
                )));
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Per-dimension z-score transform fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on at least two rows. Dimensions with (numerically) zero spread
    /// get `std = 1`.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "standardizer needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let v = s / n;
                if v <= VARIANCE_FLOOR * m.powi(2).max(1.0) {
                    1.0
                } else {
                    v.sqrt()
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim());
        v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.dim());
        z.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| x * s + m)
            .collect()
    }
}
