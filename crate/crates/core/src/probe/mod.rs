//! Feed-forward probes trained on frozen embeddings.
//!
//! A probe is a one-hidden-layer network (`D → hidden → 1` for regression,
//! `D → hidden → K` for classification) trained with Adam and early stopping
//! on a held-out split. Regression targets are min-max scaled with training
//! statistics, so reported MSE values are in scaled units.

mod adam;
mod mlp;
mod scaler;
mod train;

pub use adam::{Adam, AdamConfig};
pub use mlp::{argmax, log_softmax, sample_loss, Masks, Mlp, Objective, Target, Trace};
pub use scaler::{normalize_targets, MinMaxScaler};
pub(crate) use mlp::dot as dot_product;
pub use train::{
    align_targets, split_indices, train_classifier_probe, train_probe, FitOutcome, Trainer,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("target is constant on the training split")]
    ConstantTarget,
    #[error("target contains non-finite values")]
    NonFiniteTarget,
    #[error("only {found} examples with targets, need {needed}")]
    TooFewExamples { found: usize, needed: usize },
    #[error("only one class present")]
    SingleClass,
    #[error("ids differ: {} only in embeddings {:?}, {} only in targets {:?}",
        only_in_embeddings.len(), preview(only_in_embeddings),
        only_in_targets.len(), preview(only_in_targets))]
    IdMismatch {
        only_in_embeddings: Vec<String>,
        only_in_targets: Vec<String>,
    },
}

fn preview(ids: &[String]) -> &[String] {
    &ids[..ids.len().min(10)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub min_examples: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 128,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            dropout: 0.2,
            batch_size: 32,
            max_epochs: 200,
            patience: 20,
            val_fraction: 0.1,
            min_examples: 20,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |what: &str| Err(ProbeError::InvalidConfig(what.to_string()));
        if self.hidden_dim == 0 || self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("hidden_dim, batch_size, max_epochs and patience must be positive");
        }
        if !(self.learning_rate > 0.0 && self.eps > 0.0) {
            return bad("learning_rate and eps must be positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("betas must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must lie in (0, 1)");
        }
        if self.min_examples < 2 {
            return bad("min_examples must be at least 2");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Mse(f64),
    Accuracy(f64),
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Mse(_) => "mse",
            Metric::Accuracy(_) => "accuracy",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Metric::Mse(v) | Metric::Accuracy(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRunResult {
    pub feature: String,
    pub model: String,
    pub layer: String,
    /// Validation metric at the epoch with the lowest validation loss.
    pub metric: Metric,
    /// Same metric for the constant predictor fitted on the training split
    /// (train mean for regression, majority class for classification).
    pub baseline: f64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub seed: u64,
    pub scaler: Option<MinMaxScaler>,
}
