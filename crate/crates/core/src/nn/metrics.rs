//! Test-set metrics in physical units.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RegressorModel;
use crate::error::{Error, Result};
use crate::features::FeatureRecord;
use crate::jsonfmt;
use crate::models::ModelId;

/// Coefficient of determination; `None` when the truth has zero variance.
pub fn r_squared(truth: &[f64], pred: &[f64]) -> Option<f64> {
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).powi(2)).sum();
    (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub name: String,
    /// `null` when undefined (constant targets).
    pub r2: Option<f64>,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub model: Option<ModelId>,
    pub n_test: usize,
    pub targets: Vec<TargetMetrics>,
}

impl Metrics {
    pub fn r2(&self, name: &str) -> Option<f64> {
        self.targets.iter().find(|t| t.name == name).and_then(|t| t.r2)
    }

    pub fn min_r2(&self) -> Option<f64> {
        self.targets
            .iter()
            .map(|t| t.r2)
            .try_fold(f64::INFINITY, |m, r| r.map(|r| m.min(r)))
    }

    pub fn to_json(&self) -> Result<String> {
        jsonfmt::to_pretty(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub sample_ids: Vec<u64>,
    /// `scatter[j]` holds `(true, predicted)` pairs of target `j`.
    pub scatter: Vec<Vec<(f64, f64)>>,
}

impl Evaluation {
    /// Writes `metrics.json` and one `scatter_<target>.csv` per target.
    pub fn write_report(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("metrics.json");
        std::fs::write(&path, self.metrics.to_json()?).map_err(|e| Error::io(&path, e))?;
        for (t, pairs) in self.metrics.targets.iter().zip(&self.scatter) {
            let mut csv = String::from("sample_id,true,predicted\n");
            for (id, (truth, pred)) in self.sample_ids.iter().zip(pairs) {
                writeln!(csv, "{id},{truth:.16e},{pred:.16e}").expect("write to String");
            }
            let path = dir.join(format!("scatter_{}.csv", t.name));
            std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Predicts every record and scores each target dimension.
pub fn evaluate(model: &RegressorModel, records: &[FeatureRecord]) -> Result<Evaluation> {
    if records.is_empty() {
        return Err(Error::InsufficientData("empty test set".into()));
    }
    let features: Vec<Vec<f64>> = records.iter().map(|r| r.features.clone()).collect();
    let preds = model.predict(&features)?;
    let k = model.config.outputs;
    let mut scatter = vec![Vec::with_capacity(records.len()); k];
    for (rec, pred) in records.iter().zip(&preds) {
        if rec.targets.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: rec.targets.len(),
            });
        }
        for j in 0..k {
            scatter[j].push((rec.targets[j], pred[j]));
        }
    }
    let targets = scatter
        .iter()
        .zip(&model.target_names)
        .map(|(pairs, name)| {
            let truth: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let pred: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let mse = pairs.iter().map(|(t, p)| (t - p).powi(2)).sum::<f64>() / pairs.len() as f64;
            TargetMetrics {
                name: name.clone(),
                r2: r_squared(&truth, &pred),
                mse,
            }
        })
        .collect();
    Ok(Evaluation {
        metrics: Metrics {
            model: model.model,
            n_test: records.len(),
            targets,
        },
        sample_ids: records.iter().map(|r| r.sample_id).collect(),
        scatter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_squared_reference_cases() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r_squared(&t, &t), Some(1.0));
        assert_eq!(r_squared(&t, &[2.5; 4]), Some(0.0));
        assert!(r_squared(&t, &[4.0, 3.0, 2.0, 1.0]).unwrap() < 0.0);
        assert_eq!(r_squared(&[2.0; 3], &[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn undefined_r2_serializes_as_null() {
        let m = Metrics {
            model: None,
            n_test: 3,
            targets: vec![TargetMetrics {
                name: "g".into(),
                r2: None,
                mse: 0.5,
            }],
        };
        let json = m.to_json().unwrap();
        assert!(json.contains("\"r2\": null"), "{json}");
        assert_eq!(m.min_r2(), None);
    }
}
