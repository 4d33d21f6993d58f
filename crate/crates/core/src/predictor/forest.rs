//! Bagged random forest of [`RegressionTree`]s.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{train_tree_on, RegressionTree, TreeParams};
use super::{Regressor, Sample};
use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means ceil(sqrt(#features)).
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 2,
            max_features: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn resolve_max_features(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of tree `index`: `splitmix64(master + GOLDEN_GAMMA * (index + 1))`,
/// used to seed a ChaCha8 stream.
pub fn tree_seed(master: u64, index: usize) -> u64 {
    splitmix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index as u64 + 1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
    /// Resolved feature subset size.
    pub max_features: usize,
    pub trees: Vec<RegressionTree>,
    /// Union of viewers drawn into any tree's training resample.
    pub training_viewers: BTreeSet<String>,
}

impl ForestModel {
    /// Mean of the tree predictions.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        // shifted mean: exact when all trees agree
        let first = preds[0];
        let delta: f64 = preds.iter().map(|p| p - first).sum::<f64>() / preds.len() as f64;
        let (lo, hi) = preds
            .iter()
            .fold((first, first), |(l, h), &p| (l.min(p), h.max(p)));
        (first + delta).clamp(lo, hi)
    }
}

impl Regressor for ForestModel {
    fn predict(&self, x: &[f64]) -> f64 {
        ForestModel::predict(self, x)
    }

    fn training_viewers(&self) -> &BTreeSet<String> {
        &self.training_viewers
    }
}

/// Trains `params.n_trees` trees in parallel. Each tree draws its bootstrap
/// resample and feature subsets from its own stream seeded by
/// [`tree_seed`], so the result does not depend on scheduling.
pub fn train_forest(samples: &[Sample], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::invalid("n_trees must be at least 1"));
    }
    if samples.is_empty() {
        return Err(Error::invalid("cannot train a forest on an empty set"));
    }
    let n_features = samples[0].x.len();
    if let Some(m) = params.max_features {
        if m == 0 || m > n_features {
            return Err(Error::invalid(format!(
                "max_features must be in 1..={n_features}, got {m}"
            )));
        }
    }
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        max_features: params.resolve_max_features(n_features),
    };
    let n = samples.len();
    let grown: Vec<(RegressionTree, Vec<usize>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, i));
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let tree = train_tree_on(samples, &idx, &tree_params, &mut rng)?;
            Ok((tree, idx))
        })
        .collect::<Result<_>>()?;
    let mut training_viewers = BTreeSet::new();
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, idx) in grown {
        training_viewers.extend(idx.iter().map(|&i| samples[i].viewer_id.clone()));
        trees.push(tree);
    }
    Ok(ForestModel {
        params: *params,
        seed,
        n_features,
        max_features: tree_params.max_features,
        trees,
        training_viewers,
    })
}
