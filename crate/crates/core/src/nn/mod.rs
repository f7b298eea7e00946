//! Transformer regressor from handcrafted features to dissipation rates,
//! with hand-written backpropagation, AdamW training and evaluation.

mod config;
mod gradcheck;
mod layers;
mod metrics;
mod optim;
mod params;
mod train;
mod transformer;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use config::RegressorConfig;
pub use gradcheck::{GradCheckOptions, GradCheckReport};
pub use layers::{attention, softmax_rows};
pub use metrics::{evaluate, r_squared, Evaluation, Metrics, TargetMetrics};
pub use optim::{clip_grad_norm, AdamW, EarlyStopping, ReduceOnPlateau};
pub use params::{ParamId, ParamStore};
pub use train::{train, EpochRecord, TrainingHistory};

use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::jsonfmt;
use crate::models::ModelId;
use crate::quantum::seeded_rng;
use params::TensorRecord;
use transformer::Transformer;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Rows per forward pass during inference.
const PREDICT_CHUNK: usize = 256;

/// A network together with its input and output standardizers.
#[derive(Debug, Clone)]
pub struct RegressorModel {
    pub config: RegressorConfig,
    pub model: Option<ModelId>,
    pub target_names: Vec<String>,
    pub feature_standardizer: Standardizer,
    pub target_standardizer: Standardizer,
    pub history: TrainingHistory,
    /// Sample ids held out for testing when the model was trained.
    pub test_ids: Vec<u64>,
    net: Transformer,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    schema_version: u32,
    model: Option<ModelId>,
    target_names: Vec<String>,
    config: RegressorConfig,
    feature_standardizer: Standardizer,
    target_standardizer: Standardizer,
    history: TrainingHistory,
    test_ids: Vec<u64>,
    params: Vec<TensorRecord>,
}

impl RegressorModel {
    /// Freshly initialized network with identity standardizers.
    pub fn init(config: RegressorConfig, target_names: Vec<String>) -> Result<Self> {
        if target_names.len() != config.outputs {
            return Err(Error::DimensionMismatch {
                expected: config.outputs,
                got: target_names.len(),
            });
        }
        let net = Transformer::new(&config, &mut seeded_rng(config.seed))?;
        let identity = |n: usize| Standardizer {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        };
        Ok(Self {
            feature_standardizer: identity(config.input_dim()),
            target_standardizer: identity(config.outputs),
            config,
            model: None,
            target_names,
            history: TrainingHistory::default(),
            test_ids: Vec::new(),
            net,
        })
    }

    pub fn params(&self) -> &ParamStore {
        &self.net.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.net.params
    }

    pub fn position_embedding(&self) -> ParamId {
        self.net.position_id()
    }

    /// Eval-mode output in standardized target units for standardized inputs.
    pub fn forward_standardized(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.net.predict(x)
    }

    /// Predictions in physical units for raw feature vectors.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let dim = self.config.input_dim();
        let mut out = Vec::with_capacity(features.len());
        for chunk in features.chunks(PREDICT_CHUNK) {
            let mut x = Array2::zeros((chunk.len(), dim));
            for (mut row, f) in x.rows_mut().into_iter().zip(chunk) {
                if f.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: f.len(),
                    });
                }
                row.assign(&ndarray::ArrayView1::from(&self.feature_standardizer.apply(f)));
            }
            let y = self.net.predict(&x)?;
            out.extend(y.rows().into_iter().map(|r| {
                self.target_standardizer.invert(r.as_slice().expect("contiguous row"))
            }));
        }
        Ok(out)
    }

    /// Standardized MSE loss and its gradient (eval mode).
    pub fn loss_and_grad(&self, x: &Array2<f64>, y: &Array2<f64>) -> Result<(f64, ParamStore)> {
        self.net.loss_and_grad(x, y, None)
    }

    /// Backprop vs central differences on standardized inputs and targets.
    pub fn grad_check(
        &self,
        x: &Array2<f64>,
        y: &Array2<f64>,
        opts: &GradCheckOptions,
    ) -> Result<GradCheckReport> {
        gradcheck::grad_check(&self.net, x, y, opts)
    }

    /// Central-difference gradient of the eval-mode loss at flat indices.
    pub fn numeric_gradient(
        &self,
        x: &Array2<f64>,
        y: &Array2<f64>,
        indices: &[usize],
        step: f64,
    ) -> Result<Vec<f64>> {
        gradcheck::finite_differences(&self.net, x, y, indices, step)
    }

    pub fn to_json(&self) -> Result<String> {
        let ckpt = Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            model: self.model,
            target_names: self.target_names.clone(),
            config: self.config.clone(),
            feature_standardizer: self.feature_standardizer.clone(),
            target_standardizer: self.target_standardizer.clone(),
            history: self.history.clone(),
            test_ids: self.test_ids.clone(),
            params: self.net.params.to_records(),
        };
        jsonfmt::to_pretty(&ckpt)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "checkpoint schema version {} (supported: {CHECKPOINT_SCHEMA_VERSION})",
                ckpt.schema_version
            )));
        }
        let mut model = Self::init(ckpt.config, ckpt.target_names)?;
        model.net.params.load_records(&ckpt.params)?;
        let check = |s: &Standardizer, n: usize| {
            if s.mean.len() != n || s.std.len() != n {
                Err(Error::Schema(format!("standardizer width {} != {n}", s.mean.len())))
            } else {
                Ok(())
            }
        };
        check(&ckpt.feature_standardizer, model.config.input_dim())?;
        check(&ckpt.target_standardizer, model.config.outputs)?;
        model.model = ckpt.model;
        model.feature_standardizer = ckpt.feature_standardizer;
        model.target_standardizer = ckpt.target_standardizer;
        model.history = ckpt.history;
        model.test_ids = ckpt.test_ids;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
