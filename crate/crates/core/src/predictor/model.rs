//! Versioned JSON document for trained models.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{FeatureSchema, Features, ForestModel, MeanRegressor, Regressor};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "resadapt-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    Forest(ForestModel),
    Mean(MeanRegressor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub schema: FeatureSchema,
    pub model: Fitted,
}

impl SavedModel {
    pub fn forest(schema: FeatureSchema, model: ForestModel) -> Self {
        Self::wrap(schema, Fitted::Forest(model))
    }

    pub fn mean(schema: FeatureSchema, model: MeanRegressor) -> Self {
        Self::wrap(schema, Fitted::Mean(model))
    }

    fn wrap(schema: FeatureSchema, model: Fitted) -> Self {
        SavedModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            schema,
            model,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SavedModel = serde_json::from_str(text)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model document {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
                m.format, m.version
            )));
        }
        if let Fitted::Forest(f) = &m.model {
            if f.n_features != m.schema.len() {
                return Err(Error::invalid(
                    "forest and feature schema disagree on the number of features",
                ));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_canonical_json(self)
    }

    pub fn regressor(&self) -> &dyn Regressor {
        match &self.model {
            Fitted::Forest(f) => f,
            Fitted::Mean(m) => m,
        }
    }

    pub fn predict(&self, features: &Features) -> Result<f64> {
        Ok(self.regressor().predict(&self.schema.encode(features)?))
    }

    pub fn training_viewers(&self) -> &BTreeSet<String> {
        self.regressor().training_viewers()
    }
}
