use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Regressor, Sample};
use crate::error::{Error, Result};
use crate::numeric::mean;

/// Predicts the mean training target for every input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRegressor {
    pub value: f64,
    pub training_viewers: BTreeSet<String>,
}

impl MeanRegressor {
    pub fn fit(samples: &[Sample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(
                "cannot fit a mean regressor on an empty set",
            ));
        }
        let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
        Ok(MeanRegressor {
            value: mean(&ys),
            training_viewers: samples.iter().map(|s| s.viewer_id.clone()).collect(),
        })
    }
}

impl Regressor for MeanRegressor {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn training_viewers(&self) -> &BTreeSet<String> {
        &self.training_viewers
    }
}
