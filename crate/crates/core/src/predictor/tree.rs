//! CART regression tree grown by greedy squared-error reduction.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};
use crate::numeric::mean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until another stopping rule fires.
    pub max_depth: Option<usize>,
    /// Minimum training rows in every leaf.
    pub min_leaf: usize,
    /// Features tried at each node.
    pub max_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<(f64, usize)> {
        match self {
            Node::Leaf { value, n } => vec![(*value, *n)],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub params: TreeParams,
    pub n_features: usize,
    pub root: Node,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.root.predict(x)
    }
}

/// Grows a tree on all `samples`.
pub fn train_tree<R: Rng + ?Sized>(
    samples: &[Sample],
    params: &TreeParams,
    rng: &mut R,
) -> Result<RegressionTree> {
    let idx: Vec<usize> = (0..samples.len()).collect();
    train_tree_on(samples, &idx, params, rng)
}

/// Grows a tree on `samples[i]` for each `i` in `indices` (repeats allowed).
pub(crate) fn train_tree_on<R: Rng + ?Sized>(
    samples: &[Sample],
    indices: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> Result<RegressionTree> {
    if indices.is_empty() {
        return Err(Error::invalid("cannot train a tree on an empty set"));
    }
    let n_features = samples[indices[0]].x.len();
    if params.min_leaf == 0 {
        return Err(Error::invalid("min_leaf must be at least 1"));
    }
    if params.max_features == 0 || params.max_features > n_features {
        return Err(Error::invalid(format!(
            "feature subset size must be in 1..={n_features}, got {}",
            params.max_features
        )));
    }
    if let Some(s) = indices
        .iter()
        .map(|&i| &samples[i])
        .find(|s| s.x.len() != n_features)
    {
        return Err(Error::invalid(format!(
            "row for viewer {:?} has {} features, expected {n_features}",
            s.viewer_id,
            s.x.len()
        )));
    }
    let mut grower = Grower {
        samples,
        params,
        n_features,
    };
    let mut idx = indices.to_vec();
    let root = grower.grow(&mut idx, 0, rng);
    Ok(RegressionTree {
        params: *params,
        n_features,
        root,
    })
}

struct Grower<'a> {
    samples: &'a [Sample],
    params: &'a TreeParams,
    n_features: usize,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn grow<R: Rng + ?Sized>(&mut self, idx: &mut [usize], depth: usize, rng: &mut R) -> Node {
        let ys: Vec<f64> = idx.iter().map(|&i| self.samples[i].y).collect();
        let value = mean(&ys);
        let n = idx.len();
        let leaf = Node::Leaf { value, n };
        if self.params.max_depth.is_some_and(|d| depth >= d) || n < 2 * self.params.min_leaf {
            return leaf;
        }
        if ys.iter().all(|&y| y == ys[0]) {
            return leaf;
        }
        let sse: f64 = ys.iter().map(|y| (y - value) * (y - value)).sum();

        let mut features =
            sample_indices(rng, self.n_features, self.params.max_features).into_vec();
        features.sort_unstable();
        let Some(best) = self.best_split(idx, value, sse, &features) else {
            return leaf;
        };
        let mid = partition(idx, |i| self.samples[i].x[best.feature] <= best.threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Largest SSE reduction over `features`; the first candidate wins ties.
    fn best_split(
        &self,
        idx: &[usize],
        node_mean: f64,
        sse: f64,
        features: &[usize],
    ) -> Option<Best> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Best> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for &f in features {
            order.sort_by(|&a, &b| self.samples[a].x[f].total_cmp(&self.samples[b].x[f]));
            let centered: Vec<f64> = order
                .iter()
                .map(|&i| self.samples[i].y - node_mean)
                .collect();
            let total: f64 = centered.iter().sum();
            let mut left_sum = 0.0;
            for k in 1..n {
                left_sum += centered[k - 1];
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let a = self.samples[order[k - 1]].x[f];
                let b = self.samples[order[k]].x[f];
                if a >= b {
                    continue;
                }
                let right_sum = total - left_sum;
                // SSE(node) - SSE(left) - SSE(right) on centered targets
                let gain = left_sum * left_sum / k as f64 + right_sum * right_sum / (n - k) as f64
                    - total * total / n as f64;
                if gain > sse * 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

/// In-place stable-enough partition; returns the count of elements satisfying `pred`.
fn partition(v: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for j in 0..v.len() {
        if pred(v[j]) {
            v.swap(mid, j);
            mid += 1;
        }
    }
    mid
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(x: Vec<f64>, y: f64) -> Sample {
        Sample {
            viewer_id: "v".into(),
            video_id: "m".into(),
            x,
            y,
        }
    }

    #[test]
    fn depth_zero_is_mean() {
        let s = vec![
            sample(vec![1.0], 480.0),
            sample(vec![2.0], 720.0),
            sample(vec![3.0], 1080.0),
        ];
        let p = TreeParams {
            max_depth: Some(0),
            min_leaf: 1,
            max_features: 1,
        };
        let t = train_tree(&s, &p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(t.predict(&[9.0]), 760.0);
    }

    #[test]
    fn perfect_split_between_observed_values() {
        let s: Vec<Sample> = (0..10)
            .map(|i| sample(vec![i as f64], if i < 5 { 100.0 } else { 200.0 }))
            .collect();
        let p = TreeParams {
            max_depth: None,
            min_leaf: 1,
            max_features: 1,
        };
        let t = train_tree(&s, &p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        match &t.root {
            Node::Split {
                threshold,
                left,
                right,
                ..
            } => {
                assert!(*threshold > 4.0 && *threshold < 5.0);
                assert_eq!(**left, Node::Leaf { value: 100.0, n: 5 });
                assert_eq!(**right, Node::Leaf { value: 200.0, n: 5 });
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn leaves_respect_min_leaf() {
        let s: Vec<Sample> = (0..40)
            .map(|i| {
                sample(
                    vec![i as f64, (i * 7 % 11) as f64],
                    ((i * 37) % 13) as f64 + 1.0,
                )
            })
            .collect();
        let p = TreeParams {
            max_depth: None,
            min_leaf: 3,
            max_features: 2,
        };
        let t = train_tree(&s, &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert!(t.root.leaves().iter().all(|&(_, n)| n >= 3));
        assert_eq!(t.root.leaves().iter().map(|l| l.1).sum::<usize>(), 40);
    }

    #[test]
    fn rejects_empty_and_bad_params() {
        let p = TreeParams {
            max_depth: None,
            min_leaf: 1,
            max_features: 1,
        };
        assert!(train_tree(&[], &p, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let s = vec![sample(vec![1.0], 1.0)];
        let bad = TreeParams {
            max_features: 2,
            ..p
        };
        assert!(train_tree(&s, &bad, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
