use serde::{Deserialize, Serialize};

use super::ProbeError;

/// Min-max scaling to `[0, 1]` using statistics of the fitted values only.
/// Unseen values outside the fitted range map outside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn fit(values: &[f64]) -> Result<Self, ProbeError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProbeError::NonFiniteTarget);
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            return Err(ProbeError::ConstantTarget);
        }
        Ok(Self { min, max })
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        s * (self.max - self.min) + self.min
    }
}

pub fn normalize_targets(values: &[f64]) -> Result<(Vec<f64>, MinMaxScaler), ProbeError> {
    let scaler = MinMaxScaler::fit(values)?;
    Ok((values.iter().map(|&v| scaler.transform(v)).collect(), scaler))
}
