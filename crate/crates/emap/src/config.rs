//! Shared training hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{EmapError, Result};

/// Hyperparameters shared by the surrogate and perturber trainers.
///
/// `lambda` weighs the continuous perturbation norm, `eta` the categorical
/// change cost, and `tau` the Gumbel-Softmax temperature. `lambda`/`eta`/`tau`
/// are ignored by the surrogate trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub lambda: f64,
    pub eta: f64,
    pub tau: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 15,
            batch_size: 128,
            dropout_rate: 0.2,
            lambda: 0.1,
            eta: 2.0,
            tau: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(EmapError::InvalidArgument(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(EmapError::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(EmapError::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(EmapError::InvalidArgument(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(self.tau > 0.0) {
            return Err(EmapError::InvalidArgument(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.lambda < 0.0 || self.eta < 0.0 {
            return Err(EmapError::InvalidArgument(format!(
                "lambda and eta must be >= 0, got lambda={} eta={}",
                self.lambda, self.eta
            )));
        }
        Ok(())
    }
}
