//! Leave-one-viewer-out cross-validation.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    metrics, train_forest, FeatureRow, FeatureSchema, FeatureSet, ForestParams, MeanRegressor,
    Regressor, Sample,
};
use crate::dataset::{Dataset, Study, Trait};
use crate::error::{Error, Result};
use crate::numeric::{mean, population_variance};

/// Fits a model on a training fold.
pub trait ModelBuilder: Sync {
    fn name(&self) -> String;
    fn fit(&self, train: &[Sample]) -> Result<Box<dyn Regressor>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MeanBuilder;

impl ModelBuilder for MeanBuilder {
    fn name(&self) -> String {
        "mean".into()
    }

    fn fit(&self, train: &[Sample]) -> Result<Box<dyn Regressor>> {
        Ok(Box::new(MeanRegressor::fit(train)?))
    }
}

/// Trains a forest with the same master seed in every fold.
#[derive(Debug, Clone, Copy)]
pub struct ForestBuilder {
    pub params: ForestParams,
    pub seed: u64,
}

impl ModelBuilder for ForestBuilder {
    fn name(&self) -> String {
        "forest".into()
    }

    fn fit(&self, train: &[Sample]) -> Result<Box<dyn Regressor>> {
        Ok(Box::new(train_forest(train, &self.params, self.seed)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub viewer_id: String,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub mae: f64,
    pub rmse: f64,
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Per-fold metrics with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub model: String,
    pub folds: Vec<FoldMetrics>,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    /// Viewers without rows, left out of the folds.
    pub skipped_viewers: Vec<String>,
}

/// One fold per distinct viewer in `samples`, in sorted id order.
///
/// Every fitted model must report a training-viewer set that excludes the
/// held-out viewer; otherwise the run fails.
pub fn loocv(samples: &[Sample], builder: &dyn ModelBuilder) -> Result<EvalMetrics> {
    let viewers: BTreeSet<&str> = samples.iter().map(|s| s.viewer_id.as_str()).collect();
    if viewers.len() < 2 {
        return Err(Error::invalid(format!(
            "LOOCV needs at least 2 viewers, got {}",
            viewers.len()
        )));
    }
    let viewers: Vec<&str> = viewers.into_iter().collect();
    let folds = viewers
        .par_iter()
        .map(|&held| {
            let (test, train): (Vec<Sample>, Vec<Sample>) =
                samples.iter().cloned().partition(|s| s.viewer_id == held);
            let model = builder.fit(&train)?;
            if model.training_viewers().contains(held) {
                return Err(Error::invalid(format!(
                    "fold for viewer {held:?} leaked its rows into training"
                )));
            }
            let predictions: Vec<f64> = test.iter().map(|s| model.predict_sample(s)).collect();
            let targets: Vec<f64> = test.iter().map(|s| s.y).collect();
            let m = metrics(&predictions, &targets)?;
            Ok(FoldMetrics {
                viewer_id: held.to_string(),
                n_train: train.len(),
                n_test: test.len(),
                accuracy: m.accuracy,
                mae: m.mae,
                rmse: m.rmse,
                predictions,
                targets,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(builder.name(), folds, Vec::new()))
}

fn aggregate(model: String, folds: Vec<FoldMetrics>, skipped_viewers: Vec<String>) -> EvalMetrics {
    let stat = |f: fn(&FoldMetrics) -> f64| {
        let v: Vec<f64> = folds.iter().map(f).collect();
        (mean(&v), population_variance(&v).sqrt())
    };
    let (accuracy_mean, accuracy_std) = stat(|f| f.accuracy);
    let (mae_mean, mae_std) = stat(|f| f.mae);
    let (rmse_mean, rmse_std) = stat(|f| f.rmse);
    EvalMetrics {
        model,
        folds,
        accuracy_mean,
        accuracy_std,
        mae_mean,
        mae_std,
        rmse_mean,
        rmse_std,
        skipped_viewers,
    }
}

/// LOOCV over the participants of `study`. Participants with no sessions
/// are skipped with a warning.
pub fn loocv_by_viewer(
    dataset: &Dataset,
    study: Study,
    set: FeatureSet,
    builder: &dyn ModelBuilder,
) -> Result<EvalMetrics> {
    let schema = FeatureSchema::new(set);
    let rows = super::feature_rows(dataset, study);
    let samples = schema.encode_rows(&rows)?;
    let with_rows: BTreeSet<&str> = samples.iter().map(|s| s.viewer_id.as_str()).collect();
    let skipped: Vec<String> = dataset
        .participants()
        .iter()
        .filter(|p| p.study == study && !with_rows.contains(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect();
    for id in &skipped {
        log::warn!("viewer {id:?} has no sessions in study {study}; skipped");
    }
    let mut eval = loocv(&samples, builder)?;
    eval.skipped_viewers = skipped;
    Ok(eval)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitEval {
    pub n_viewers: usize,
    pub n_rows: usize,
    pub forest: EvalMetrics,
    pub mean: EvalMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalityEval {
    /// Keyed by dominant trait name.
    pub traits: BTreeMap<String, TraitEval>,
    /// Traits left out for having fewer than two viewers, with their viewer count.
    pub excluded: BTreeMap<String, usize>,
}

/// Separate forest and mean-baseline LOOCV within each dominant-trait group.
pub fn per_personality_eval(
    dataset: &Dataset,
    study: Study,
    set: FeatureSet,
    params: &ForestParams,
    seed: u64,
) -> Result<PersonalityEval> {
    let rows: Vec<FeatureRow> = dataset
        .personality_rows(study)?
        .iter()
        .map(FeatureRow::from)
        .collect();
    let schema = FeatureSchema::new(set);
    let mut out = PersonalityEval {
        traits: BTreeMap::new(),
        excluded: BTreeMap::new(),
    };
    for t in Trait::ALL {
        let subset: Vec<FeatureRow> = rows
            .iter()
            .filter(|r| {
                r.features
                    .personality
                    .as_ref()
                    .is_some_and(|p| p.dominant == t)
            })
            .cloned()
            .collect();
        let viewers: BTreeSet<&str> = subset.iter().map(|r| r.viewer_id.as_str()).collect();
        if viewers.len() < 2 {
            log::warn!(
                "dominant trait {t} has {} viewer(s); excluded from per-trait evaluation",
                viewers.len()
            );
            out.excluded.insert(t.to_string(), viewers.len());
            continue;
        }
        let samples = schema.encode_rows(&subset)?;
        let forest = loocv(
            &samples,
            &ForestBuilder {
                params: *params,
                seed,
            },
        )?;
        let mean = loocv(&samples, &MeanBuilder)?;
        out.traits.insert(
            t.to_string(),
            TraitEval {
                n_viewers: viewers.len(),
                n_rows: samples.len(),
                forest,
                mean,
            },
        );
    }
    Ok(out)
}
