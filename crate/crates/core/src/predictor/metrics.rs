use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::mean;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// 100 - MAPE.
    pub accuracy: f64,
    /// Mean absolute percentage error, in percent of the true resolution.
    pub mape: f64,
    pub mae: f64,
    pub rmse: f64,
}

pub fn metrics(predictions: &[f64], targets: &[f64]) -> Result<Metrics> {
    if predictions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::invalid("metrics need at least one prediction"));
    }
    if let Some(t) = targets.iter().find(|&&t| t.is_nan() || t <= 0.0) {
        return Err(Error::invalid(format!(
            "targets must be positive for percentage error, got {t}"
        )));
    }
    let abs: Vec<f64> = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .collect();
    let pct: Vec<f64> = abs.iter().zip(targets).map(|(a, t)| a / t).collect();
    let sq: Vec<f64> = abs.iter().map(|a| a * a).collect();
    let mape = 100.0 * mean(&pct);
    let mae = mean(&abs);
    // guard the RMSE >= MAE identity against last-bit rounding
    let rmse = mean(&sq).sqrt().max(mae);
    Ok(Metrics {
        accuracy: 100.0 - mape,
        mape,
        mae,
        rmse,
    })
}
