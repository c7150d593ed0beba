use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::optim::{OptimizerKind, Schedule};

/// Training length, in optimizer steps or passes over the training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Iterations(usize),
    Epochs(usize),
}

impl Budget {
    pub fn count(self) -> usize {
        match self {
            Budget::Iterations(n) | Budget::Epochs(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub schedule: Schedule,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seq_len: usize,
    pub budget: Budget,
    pub seed: u64,
    /// Maximum global gradient norm; off when `None`.
    pub gradient_clip: Option<f64>,
    /// Evaluate every this many iterations (or epochs); 0 evaluates only at the end.
    pub eval_every: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            schedule: Schedule::Constant,
            optimizer: OptimizerKind::Adam,
            weight_decay: 0.0,
            batch_size: 16,
            seq_len: 16,
            budget: Budget::Iterations(1000),
            seed: 0,
            gradient_clip: None,
            eval_every: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.seq_len == 0 {
            return Err(Error::InvalidArgument("seq_len must be >= 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument("weight_decay must be >= 0".into()));
        }
        if let Some(c) = self.gradient_clip {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument("gradient_clip must be > 0".into()));
            }
        }
        Ok(())
    }
}
