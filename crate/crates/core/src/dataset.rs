//! Bulk trajectory generation, train/test splitting and JSON Lines storage.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use log::{info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::models::{instantiate, ModelId, ModelSpec};
use crate::quantum::seeded_rng;
use crate::sim::{evolve, EvolveOptions, Trajectory};

/// Every `SPOT_CHECK_EVERY`-th sample has its states checked for trace and
/// Hermiticity.
pub const SPOT_CHECK_EVERY: u64 = 100;
const SPOT_TRACE_TOL: f64 = 1e-8;
const SPOT_HERMITIAN_TOL: f64 = 1e-10;

/// One simulated sample, one line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub model: ModelId,
    pub params: IndexMap<String, f64>,
    /// Seed that reproduces this record on its own.
    pub seed: u64,
    pub times: Vec<f64>,
    pub series: IndexMap<String, Vec<f64>>,
    pub targets: IndexMap<String, f64>,
}

impl SampleRecord {
    pub fn target_values(&self) -> Vec<f64> {
        self.targets.values().copied().collect()
    }

    pub fn series(&self, name: &str) -> Result<&[f64]> {
        self.series
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingSeries(name.to_string()))
    }

    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            series: self.series.clone(),
            states: None,
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        jsonfmt::to_line(self)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: SampleRecord = serde_json::from_str(line)?;
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<()> {
        let expected = self.model.target_count();
        if self.targets.len() != expected {
            return Err(Error::Schema(format!(
                "sample {}: {} targets for model {}, expected {expected}",
                self.sample_id,
                self.targets.len(),
                self.model
            )));
        }
        if let Some((name, s)) = self.series.iter().find(|(_, s)| s.len() != self.times.len()) {
            return Err(Error::Schema(format!(
                "sample {}: series `{name}` has {} points, times has {}",
                self.sample_id,
                s.len(),
                self.times.len()
            )));
        }
        Ok(())
    }
}

/// Seed of sample `k`, derived from the dataset seed by counter so that any
/// sample can be regenerated independently of the others.
pub fn sample_seed(dataset_seed: u64, sample_id: u64) -> u64 {
    splitmix64(dataset_seed ^ splitmix64(sample_id.wrapping_add(0x632B_E59B_D9B4_E019)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulates a single sample from an explicit seed.
pub fn simulate_sample(spec: &ModelSpec, sample_id: u64, seed: u64) -> Result<SampleRecord> {
    let mut rng = seeded_rng(seed);
    let inst = instantiate(spec, &mut rng)?;
    let spot_check = sample_id % SPOT_CHECK_EVERY == 0;
    let traj = evolve(
        &inst.system,
        &inst.rho0,
        &spec.grid,
        &spec.observables(),
        EvolveOptions {
            record_states: spot_check,
            ..EvolveOptions::default()
        },
    )?;
    if let Some(states) = &traj.states {
        for (t, rho) in traj.times.iter().zip(states) {
            let tr = (rho.trace().re - 1.0).abs();
            let herm = rho.hermiticity_defect();
            if tr > SPOT_TRACE_TOL || herm > SPOT_HERMITIAN_TOL {
                return Err(Error::SimulationFailure {
                    time: *t,
                    reason: format!("invariant check failed (trace {tr:e}, hermiticity {herm:e})"),
                });
            }
        }
    }
    if let Some((name, _)) = traj
        .series
        .iter()
        .find(|(_, s)| s.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::SimulationFailure {
            time: f64::NAN,
            reason: format!("non-finite values in series `{name}`"),
        });
    }
    Ok(SampleRecord {
        sample_id,
        model: spec.id,
        params: inst.params,
        seed,
        times: traj.times,
        series: traj.series,
        targets: inst.targets.to_map(),
    })
}

/// A sample that could not be simulated.
#[derive(Debug)]
pub struct SkippedSample {
    pub sample_id: u64,
    pub seed: u64,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct Generated {
    /// Successful records in `sample_id` order.
    pub records: Vec<SampleRecord>,
    pub skipped: Vec<SkippedSample>,
}

/// Generates `n_samples` records. Output is independent of `workers`.
pub fn generate_dataset(
    spec: &ModelSpec,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Generated> {
    if n_samples == 0 {
        return Err(Error::InsufficientData("n_samples must be at least 1".into()));
    }
    let run = |k: u64| {
        let s = sample_seed(seed, k);
        (k, s, simulate_sample(spec, k, s))
    };
    let results: Vec<_> = if workers <= 1 {
        (0..n_samples as u64).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::OutOfRange(format!("cannot build worker pool: {e}")))?;
        pool.install(|| (0..n_samples as u64).into_par_iter().map(run).collect())
    };

    let mut out = Generated::default();
    for (sample_id, seed, res) in results {
        match res {
            Ok(rec) => out.records.push(rec),
            Err(error @ Error::SimulationFailure { .. }) => {
                warn!("skipping sample {sample_id} (seed {seed}): {error}");
                out.skipped.push(SkippedSample {
                    sample_id,
                    seed,
                    error,
                });
            }
            Err(e) => return Err(e),
        }
    }
    info!(
        "generated {} {} samples, skipped {}",
        out.records.len(),
        spec.id,
        out.skipped.len()
    );
    Ok(out)
}

/// Deterministic shuffled split into `(train, test)`.
pub fn split<T: Clone>(records: &[T], train_frac: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 records to split, got {}",
            records.len()
        )));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::OutOfRange(format!(
            "train fraction {train_frac} outside (0, 1)"
        )));
    }
    let n = records.len();
    let n_train = ((n as f64 * train_frac).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let train = order[..n_train].iter().map(|&i| records[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| records[i].clone()).collect();
    Ok((train, test))
}

pub fn write_jsonl<'a>(path: &Path, records: impl IntoIterator<Item = &'a SampleRecord>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        writeln!(w, "{}", rec.to_json_line()?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(SampleRecord::from_json_line(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_sizes_and_disjointness() {
        let ids: Vec<u32> = (0..1000).collect();
        let (train, test) = split(&ids, 0.8, 1).unwrap();
        assert_eq!((train.len(), test.len()), (800, 200));
        let mut all: Vec<u32> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, ids);

        let small: Vec<u32> = (0..10).collect();
        let (a, b) = split(&small, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        assert_eq!(split(&small, 0.8, 3).unwrap(), (a, b));
    }

    #[test]
    fn split_errors() {
        assert!(split(&[1], 0.5, 0).is_err());
        assert!(split(&[1, 2, 3], 1.0, 0).is_err());
        assert!(split(&[1, 2, 3], 0.0, 0).is_err());
    }

    #[test]
    fn sample_seeds_are_distinct() {
        let mut seeds: Vec<u64> = (0..10_000).map(|k| sample_seed(42, k)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(sample_seed(1, 0), sample_seed(2, 0));
    }

    #[test]
    fn sq_td_targets_in_range() {
        let spec = ModelSpec::new(ModelId::SqTd);
        let gen = generate_dataset(&spec, 20, 9, 1).unwrap();
        assert!(gen.skipped.is_empty());
        for rec in &gen.records {
            assert_eq!(rec.targets.len(), 3);
            assert!(rec.targets.values().all(|v| *v > 0.1 && *v < 2.0));
            assert_eq!(rec.series["sz"].len(), 100);
        }
    }

    #[test]
    fn jc_starts_in_fock_state() {
        let spec = ModelSpec::new(ModelId::Jc);
        let gen = generate_dataset(&spec, 10, 2, 1).unwrap();
        for rec in &gen.records {
            let n = rec.params["n"];
            assert!((rec.series["n_phot"][0] - n).abs() < 1e-9);
        }
    }

    #[test]
    fn record_reproduces_from_its_seed() {
        let spec = ModelSpec::new(ModelId::SqConstTwo);
        let gen = generate_dataset(&spec, 5, 11, 1).unwrap();
        let rec = &gen.records[3];
        let again = simulate_sample(&spec, rec.sample_id, rec.seed).unwrap();
        assert_eq!(&again, rec);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let spec = ModelSpec::new(ModelId::Ising);
        let a = generate_dataset(&spec, 12, 5, 1).unwrap();
        let b = generate_dataset(&spec, 12, 5, 3).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn rejects_malformed_lines() {
        let spec = ModelSpec::new(ModelId::SqConst);
        let rec = simulate_sample(&spec, 0, 1).unwrap();
        let mut bad = rec.clone();
        bad.targets.insert("extra".into(), 1.0);
        assert!(SampleRecord::from_json_line(&bad.to_json_line().unwrap()).is_err());
        let mut short = rec;
        short.series.get_mut("sz").unwrap().pop();
        assert!(SampleRecord::from_json_line(&short.to_json_line().unwrap()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn json_round_trip_is_byte_identical(seed in any::<u64>(), which in 0usize..4) {
            let id = [ModelId::SqConst, ModelId::SqConstTwo, ModelId::SqTd, ModelId::Heisenberg][which];
            let rec = simulate_sample(&ModelSpec::new(id), 1, seed).unwrap();
            let line = rec.to_json_line().unwrap();
            let back = SampleRecord::from_json_line(&line).unwrap();
            prop_assert_eq!(&back, &rec);
            prop_assert_eq!(back.to_json_line().unwrap(), line);
        }
    }
}
