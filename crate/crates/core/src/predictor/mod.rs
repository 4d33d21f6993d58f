//! Final-resolution prediction: feature encoding, a CART random forest, the
//! mean baseline, accuracy metrics and leave-one-viewer-out evaluation.

mod baseline;
mod cv;
mod forest;
mod metrics;
mod model;
mod tree;

pub use baseline::MeanRegressor;
pub use cv::{
    loocv, loocv_by_viewer, per_personality_eval, EvalMetrics, FoldMetrics, ForestBuilder,
    MeanBuilder, ModelBuilder, PersonalityEval, TraitEval,
};
pub use forest::{splitmix64, train_forest, tree_seed, ForestModel, ForestParams};
pub use metrics::{metrics, Metrics};
pub use model::{Fitted, SavedModel, MODEL_FORMAT, MODEL_VERSION};
pub use tree::{train_tree, Node, RegressionTree, TreeParams};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{Activity, AnalysisRow, Dataset, Gender, Study, Trait};
use crate::error::{Error, Result};

/// Personality inputs: per-trait percentiles in [0, 1] and the dominant trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Personality {
    pub percentiles: [f64; 5],
    pub dominant: Trait,
}

/// Context a prediction is made from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub activity: Activity,
    pub si: f64,
    pub ti: f64,
    pub gender: Gender,
    pub age: u32,
    pub glasses: bool,
    pub personality: Option<Personality>,
}

/// One labelled session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub viewer_id: String,
    pub video_id: String,
    pub features: Features,
    /// Final resolution in lines.
    pub target: f64,
}

impl From<&AnalysisRow> for FeatureRow {
    fn from(r: &AnalysisRow) -> Self {
        FeatureRow {
            viewer_id: r.participant_id.clone(),
            video_id: r.video_id.clone(),
            features: Features {
                activity: r.activity,
                si: r.si,
                ti: r.ti,
                gender: r.gender,
                age: r.age,
                glasses: r.glasses,
                personality: r.traits.as_ref().map(|t| Personality {
                    percentiles: t.percentiles,
                    dominant: t.dominant,
                }),
            },
            target: f64::from(r.final_resolution),
        }
    }
}

/// Which feature groups enter the model. Activity and SI are always used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub ti: bool,
    pub demographics: bool,
    pub personality: bool,
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet {
            ti: true,
            demographics: true,
            personality: true,
        }
    }
}

impl FeatureSet {
    /// Default groups, with personality only where the study collected it.
    pub fn for_study(study: Study) -> Self {
        FeatureSet {
            personality: study == Study::Two,
            ..Self::default()
        }
    }
}

/// Column layout of the numeric feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub set: FeatureSet,
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn new(set: FeatureSet) -> Self {
        let mut names: Vec<String> = Activity::ALL
            .iter()
            .map(|a| format!("activity_{a}"))
            .collect();
        names.push("si".into());
        if set.ti {
            names.push("ti".into());
        }
        if set.demographics {
            names.extend(["male", "age", "glasses"].map(String::from));
        }
        if set.personality {
            names.extend(Trait::ALL.iter().map(|t| format!("pct_{t}")));
            names.extend(Trait::ALL.iter().map(|t| format!("dominant_{t}")));
        }
        FeatureSchema { set, names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn encode(&self, f: &Features) -> Result<Vec<f64>> {
        if !(f.si.is_finite() && f.ti.is_finite()) {
            return Err(Error::invalid("non-finite SI/TI feature"));
        }
        let mut x: Vec<f64> = Activity::ALL
            .iter()
            .map(|&a| f64::from(u8::from(a == f.activity)))
            .collect();
        x.push(f.si);
        if self.set.ti {
            x.push(f.ti);
        }
        if self.set.demographics {
            x.push(f64::from(u8::from(f.gender == Gender::Male)));
            x.push(f64::from(f.age));
            x.push(f64::from(u8::from(f.glasses)));
        }
        if self.set.personality {
            let p = f.personality.as_ref().ok_or_else(|| {
                Error::invalid("feature set includes personality but the row has none")
            })?;
            x.extend(p.percentiles);
            x.extend(
                Trait::ALL
                    .iter()
                    .map(|&t| f64::from(u8::from(t == p.dominant))),
            );
        }
        debug_assert_eq!(x.len(), self.names.len());
        Ok(x)
    }

    pub fn encode_rows(&self, rows: &[FeatureRow]) -> Result<Vec<Sample>> {
        rows.iter()
            .map(|r| {
                if !(r.target.is_finite() && r.target > 0.0) {
                    return Err(Error::invalid(format!(
                        "target must be positive, got {}",
                        r.target
                    )));
                }
                Ok(Sample {
                    viewer_id: r.viewer_id.clone(),
                    video_id: r.video_id.clone(),
                    x: self.encode(&r.features)?,
                    y: r.target,
                })
            })
            .collect()
    }
}

/// An encoded training/evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub viewer_id: String,
    pub video_id: String,
    pub x: Vec<f64>,
    pub y: f64,
}

/// A fitted model.
pub trait Regressor: Send + Sync {
    fn predict(&self, x: &[f64]) -> f64;

    /// Prediction for a full sample; defaults to [`predict`](Self::predict) on its features.
    fn predict_sample(&self, s: &Sample) -> f64 {
        self.predict(&s.x)
    }

    /// Viewer ids whose rows the model was fitted on.
    fn training_viewers(&self) -> &BTreeSet<String>;
}

/// Labelled rows of `study`.
pub fn feature_rows(dataset: &Dataset, study: Study) -> Vec<FeatureRow> {
    dataset
        .analysis_rows(study)
        .iter()
        .map(FeatureRow::from)
        .collect()
}
