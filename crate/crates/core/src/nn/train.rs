//! Mini-batch training with validation-driven scheduling and early stopping.

use log::{debug, info};
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::RegressorConfig;
use super::optim::{clip_grad_norm, AdamW, EarlyStopping, ReduceOnPlateau};
use super::RegressorModel;
use crate::error::{Error, Result};
use crate::features::{FeatureRecord, Standardizer};
use crate::models::ModelId;
use crate::quantum::seeded_rng;

/// Stream offset of the batch-order/dropout RNG relative to the init RNG.
const TRAIN_STREAM: u64 = 0x5DEE_CE66_D1CE_5EED;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub train_ids: Vec<u64>,
    pub val_ids: Vec<u64>,
}

fn to_matrix(rows: &[&[f64]]) -> Array2<f64> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut m = Array2::zeros((rows.len(), cols));
    for (mut dst, src) in m.rows_mut().into_iter().zip(rows) {
        dst.assign(&ndarray::ArrayView1::from(*src));
    }
    m
}

/// Trains a fresh model. A fraction `config.val_fraction` of `records` is
/// held out for validation; standardizers are fit on the remainder.
pub fn train(
    config: &RegressorConfig,
    records: &[FeatureRecord],
    target_names: Vec<String>,
    model_id: Option<ModelId>,
) -> Result<RegressorModel> {
    config.validate()?;
    if records.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "training needs at least 4 records, got {}",
            records.len()
        )));
    }
    for r in records {
        if r.features.len() != config.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: config.input_dim(),
                got: r.features.len(),
            });
        }
        if r.targets.len() != config.outputs {
            return Err(Error::DimensionMismatch {
                expected: config.outputs,
                got: r.targets.len(),
            });
        }
    }

    let mut model = RegressorModel::init(config.clone(), target_names)?;
    model.model = model_id;

    let n = records.len();
    let n_val = ((n as f64 * config.val_fraction).round() as usize).clamp(1, n - 2);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded_rng(config.seed ^ TRAIN_STREAM);
    order.shuffle(&mut rng);
    let (val_idx, fit_idx) = order.split_at(n_val);
    let mut val_idx = val_idx.to_vec();
    val_idx.sort_unstable();
    let mut fit_idx = fit_idx.to_vec();
    fit_idx.sort_unstable();

    let fit_features: Vec<Vec<f64>> = fit_idx.iter().map(|&i| records[i].features.clone()).collect();
    let fit_targets: Vec<Vec<f64>> = fit_idx.iter().map(|&i| records[i].targets.clone()).collect();
    model.feature_standardizer = Standardizer::fit(&fit_features)?;
    model.target_standardizer = Standardizer::fit(&fit_targets)?;

    let standardize = |idx: &[usize]| {
        let xs: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| model.feature_standardizer.apply(&records[i].features))
            .collect();
        let ys: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| model.target_standardizer.apply(&records[i].targets))
            .collect();
        let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let yr: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
        (to_matrix(&xr), to_matrix(&yr))
    };
    let (x_fit, y_fit) = standardize(&fit_idx);
    let (x_val, y_val) = standardize(&val_idx);

    let mut history = TrainingHistory {
        train_ids: fit_idx.iter().map(|&i| records[i].sample_id).collect(),
        val_ids: val_idx.iter().map(|&i| records[i].sample_id).collect(),
        ..TrainingHistory::default()
    };

    let mut opt = AdamW::new(model.params(), config.lr, config.weight_decay);
    let mut scheduler =
        ReduceOnPlateau::new(config.plateau_factor, config.plateau_patience, config.plateau_threshold);
    let mut stopper = EarlyStopping::new(config.early_stop_patience);
    let mut best_params = model.params().clone();
    let mut batch_order: Vec<usize> = (0..fit_idx.len()).collect();

    for epoch in 0..config.max_epochs {
        batch_order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in batch_order.chunks(config.batch_size).enumerate() {
            let xb = x_fit.select(Axis(0), chunk);
            let yb = y_fit.select(Axis(0), chunk);
            let (loss, mut grads) = model.net.loss_and_grad(&xb, &yb, Some(&mut rng))?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    lr: opt.lr,
                    reason: if loss.is_finite() {
                        "non-finite gradient".into()
                    } else {
                        format!("loss = {loss}")
                    },
                });
            }
            clip_grad_norm(&mut grads, config.grad_clip_norm);
            opt.step(&mut model.net.params, &grads);
            total += loss * chunk.len() as f64;
        }
        let train_loss = total / fit_idx.len() as f64;
        let val_loss = model.net.loss(&x_val, &y_val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: 0,
                lr: opt.lr,
                reason: format!("validation loss = {val_loss}"),
            });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr: opt.lr,
        });
        debug!("epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e} lr {:.3e}", opt.lr);

        if stopper.observe(epoch, val_loss) {
            best_params.clone_from(model.params());
        }
        opt.lr = scheduler.step(val_loss, opt.lr);
        if stopper.should_stop() {
            history.stopped_early = true;
            break;
        }
    }

    let (best_epoch, best_val) = stopper.best().expect("at least one epoch");
    history.best_epoch = best_epoch;
    history.best_val_loss = best_val;
    info!(
        "trained {} epochs, best validation loss {best_val:.6e} at epoch {best_epoch}",
        history.epochs.len()
    );
    *model.params_mut() = best_params;
    model.history = history;
    Ok(model)
}
