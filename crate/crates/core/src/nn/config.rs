use serde::{Deserialize, Serialize};

use crate::data::NormalizationMode;
use crate::error::{Result, ShadeError};

/// Hyperparameters for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Neighbourhood size for core distances and minimum cluster size.
    pub mu: usize,
    pub batch_size: usize,
    pub embed_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda_rec: f64,
    pub lambda_d: f64,
    pub hidden_dims: Vec<usize>,
    pub seed: u64,
    /// Largest `n` for which the input dc-tree keeps a dense distance matrix.
    pub dense_cache_threshold: usize,
    /// Reconstruction-only epochs before the main loop.
    pub pretrain_epochs: usize,
    /// Divide input dc distances by the dc-tree root height before training.
    pub normalize_ddc: bool,
    pub normalization: NormalizationMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mu: 5,
            batch_size: 500,
            embed_dim: 10,
            epochs: 100,
            learning_rate: 1e-3,
            lambda_rec: 1.0,
            lambda_d: 1.0,
            hidden_dims: vec![256, 128],
            seed: 0,
            dense_cache_threshold: 2048,
            pretrain_epochs: 0,
            normalize_ddc: false,
            normalization: NormalizationMode::FeatureWise,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu < 2 {
            return Err(ShadeError::invalid("mu", "must be at least 2"));
        }
        if self.batch_size < 2 {
            return Err(ShadeError::invalid("batch_size", "must be at least 2"));
        }
        if self.embed_dim == 0 {
            return Err(ShadeError::invalid("embed_dim", "must be at least 1"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(ShadeError::invalid("hidden_dims", "layer widths must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(ShadeError::invalid("learning_rate", "must be positive and finite"));
        }
        for (name, v) in [("lambda_rec", self.lambda_rec), ("lambda_d", self.lambda_d)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ShadeError::invalid(name, "must be non-negative and finite"));
            }
        }
        Ok(())
    }
}
