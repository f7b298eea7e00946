//! Architecture and training hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::models::ModelId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorConfig {
    pub feature_set: FeatureSet,
    /// Observable channels, one token each.
    pub channels: usize,
    pub outputs: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub mlp_head: Vec<usize>,
    pub dropout: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    /// Relative improvement the scheduler requires to reset its counter.
    pub plateau_threshold: f64,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub grad_clip_norm: f64,
    /// Fraction of the training partition held out for validation.
    pub val_fraction: f64,
    pub seed: u64,
}

impl RegressorConfig {
    /// Defaults for a model id: feature set, depth and batch size per model.
    pub fn for_model(id: ModelId) -> Self {
        let (feature_set, n_layers, n_heads) = match id {
            ModelId::SqConst => (FeatureSet::F18, 2, 4),
            ModelId::SqConstTwo => (FeatureSet::F10, 3, 8),
            ModelId::SqTd | ModelId::SqTdTwo | ModelId::Jc => (FeatureSet::F18, 4, 8),
            ModelId::Heisenberg | ModelId::Ising => (FeatureSet::F10, 4, 8),
        };
        Self {
            feature_set,
            channels: id.observable_names().len(),
            outputs: id.target_count(),
            d_model: 128,
            n_layers,
            n_heads,
            d_ff: 512,
            mlp_head: vec![256, 128, 64],
            dropout: 0.1,
            batch_size: if id == ModelId::Jc { 64 } else { 32 },
            lr: 1e-3,
            weight_decay: 0.01,
            plateau_factor: 0.5,
            plateau_patience: 20,
            plateau_threshold: 1e-4,
            early_stop_patience: 30,
            max_epochs: 300,
            grad_clip_norm: 1.0,
            val_fraction: 0.1,
            seed: 0,
        }
    }

    /// Tiny configuration used for gradient checks and fast tests.
    pub fn toy(channels: usize, feature_set: FeatureSet, outputs: usize) -> Self {
        Self {
            feature_set,
            channels,
            outputs,
            d_model: 16,
            n_layers: 2,
            n_heads: 2,
            d_ff: 32,
            mlp_head: vec![24, 16, 8],
            dropout: 0.0,
            batch_size: 8,
            max_epochs: 50,
            ..Self::for_model(ModelId::SqConst)
        }
    }

    pub fn input_dim(&self) -> usize {
        self.channels * self.feature_set.per_channel()
    }

    /// Overlays the keys of a JSON object onto this configuration.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        let (Some(obj), Some(over)) = (base.as_object_mut(), overrides.as_object()) else {
            return Err(Error::Schema("config overrides must be a JSON object".into()));
        };
        for (k, v) in over {
            if !obj.contains_key(k) {
                return Err(Error::Schema(format!("unknown config key `{k}`")));
            }
            obj.insert(k.clone(), v.clone());
        }
        let cfg: Self = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::OutOfRange(msg));
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return bad(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.channels == 0 || self.outputs == 0 || self.batch_size == 0 {
            return bad("channels, outputs and batch_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad(format!("val_fraction {} outside (0, 1)", self.val_fraction));
        }
        if !(self.lr > 0.0) || !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return bad("lr must be positive and plateau_factor in (0, 1)".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_model_shapes() {
        let outputs: Vec<usize> = ModelId::ALL
            .iter()
            .map(|id| RegressorConfig::for_model(*id).outputs)
            .collect();
        assert_eq!(outputs, vec![1, 2, 3, 6, 4, 4, 6]);
        let sq = RegressorConfig::for_model(ModelId::SqConst);
        assert_eq!((sq.n_layers, sq.n_heads, sq.input_dim()), (2, 4, 18));
        assert_eq!(RegressorConfig::for_model(ModelId::Jc).batch_size, 64);
        assert_eq!(RegressorConfig::for_model(ModelId::Heisenberg).input_dim(), 60);
        for id in ModelId::ALL {
            RegressorConfig::for_model(id).validate().unwrap();
        }
    }

    #[test]
    fn overrides_apply_and_validate() {
        let base = RegressorConfig::for_model(ModelId::SqTd);
        let cfg = base
            .with_overrides(&serde_json::json!({"max_epochs": 5, "dropout": 0.0}))
            .unwrap();
        assert_eq!(cfg.max_epochs, 5);
        assert_eq!(cfg.dropout, 0.0);
        assert!(base.with_overrides(&serde_json::json!({"n_heads": 7})).is_err());
        assert!(base.with_overrides(&serde_json::json!({"bogus": 1})).is_err());
    }
}
