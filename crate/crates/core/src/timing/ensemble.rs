//! Least-absolute-deviation gradient boosting.
//!
//! Each round fits a least-squares regression tree to the signs of the current
//! residuals, then replaces every leaf value with the median residual of the
//! training rows that fall into it.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Node, RegressionTree};
use super::{FeatureVector, FEATURE_COUNT};
use crate::error::{Error, Result};

/// Predictions never go below this many seconds.
pub const MIN_PREDICTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub subsample: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 200,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config(format!("subsample {} outside (0, 1]", self.subsample)));
        }
        Ok(())
    }

    pub fn min_rows(&self) -> usize {
        2 * self.min_samples_leaf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub hyperparams: Hyperparams,
    pub trees: Vec<RegressionTree>,
}

impl TreeEnsemble {
    pub fn constant(base_score: f64) -> Self {
        TreeEnsemble {
            base_score,
            learning_rate: 1.0,
            hyperparams: Hyperparams::default(),
            trees: vec![],
        }
    }

    /// `base + lr · Σ tree(x)`, before clamping.
    pub fn raw_score(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.evaluate(x)).sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict(&self, fv: &FeatureVector) -> f64 {
        self.raw_score(&fv.to_array()).max(MIN_PREDICTION)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.base_score.is_finite() || !self.learning_rate.is_finite() {
            return Err("non-finite base score or learning rate".into());
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate().map_err(|e| format!("tree {i}: {e}"))?;
        }
        Ok(())
    }
}

pub fn train_ensemble(rows: &[(FeatureVector, f64)], hp: &Hyperparams) -> Result<TreeEnsemble> {
    hp.validate()?;
    if rows.len() < hp.min_rows() {
        return Err(Error::Input(format!(
            "{} rows, need at least {}",
            rows.len(),
            hp.min_rows()
        )));
    }
    if let Some((_, t)) = rows.iter().find(|(_, t)| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Input(format!("target {t} is not a positive finite time")));
    }
    let xs: Vec<[f64; FEATURE_COUNT]> = rows.iter().map(|(fv, _)| fv.to_array()).collect();
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input("feature vector with non-finite component".into()));
    }
    let ys: Vec<f64> = rows.iter().map(|(_, t)| *t).collect();

    let base_score = median(&mut ys.clone());
    let mut scores = vec![base_score; ys.len()];
    let mut trees = Vec::with_capacity(hp.n_trees);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let n_sample = ((ys.len() as f64 * hp.subsample).round() as usize).clamp(hp.min_rows(), ys.len());

    for _ in 0..hp.n_trees {
        let residuals: Vec<f64> = ys.iter().zip(&scores).map(|(y, f)| y - f).collect();
        let signs: Vec<f64> = residuals.iter().map(|&r| sign(r)).collect();
        if signs.iter().all(|&g| g == 0.0) {
            break;
        }
        let rows_in_bag: Vec<usize> = if n_sample < ys.len() {
            let mut idx = sample(&mut rng, ys.len(), n_sample).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..ys.len()).collect()
        };

        let mut builder = TreeBuilder {
            xs: &xs,
            signs: &signs,
            hp,
            nodes: Vec::new(),
        };
        builder.grow(rows_in_bag, 0);
        let mut tree = RegressionTree { nodes: builder.nodes };

        // Leaf values come from every training row routed to the leaf, so a
        // subsampled structure still takes an L1-optimal step on the full set.
        let leaf_of: Vec<usize> = xs.iter().map(|x| leaf_index(&tree, x)).collect();
        let mut per_leaf: Vec<Vec<f64>> = vec![Vec::new(); tree.nodes.len()];
        for (i, &leaf) in leaf_of.iter().enumerate() {
            per_leaf[leaf].push(residuals[i]);
        }
        for (idx, node) in tree.nodes.iter_mut().enumerate() {
            if let Node::Leaf { value } = node {
                *value = if per_leaf[idx].is_empty() {
                    0.0
                } else {
                    median(&mut per_leaf[idx])
                };
            }
        }
        for (score, &leaf) in scores.iter_mut().zip(&leaf_of) {
            if let Node::Leaf { value } = tree.nodes[leaf] {
                *score += hp.learning_rate * value;
            }
        }
        trees.push(tree);
    }

    Ok(TreeEnsemble {
        base_score,
        learning_rate: hp.learning_rate,
        hyperparams: *hp,
        trees,
    })
}

fn sign(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn leaf_index(tree: &RegressionTree, x: &[f64; FEATURE_COUNT]) -> usize {
    let mut idx = 0;
    while let Node::Split {
        feature,
        threshold,
        left,
        right,
    } = tree.nodes[idx]
    {
        idx = if x[feature as usize] < threshold {
            left as usize
        } else {
            right as usize
        };
    }
    idx
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

struct TreeBuilder<'a> {
    xs: &'a [[f64; FEATURE_COUNT]],
    signs: &'a [f64],
    hp: &'a Hyperparams,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeBuilder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> u32 {
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        if depth >= self.hp.max_depth || rows.len() < 2 * self.hp.min_samples_leaf {
            return idx as u32;
        }
        let Some(best) = self.best_split(&rows) else {
            return idx as u32;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.xs[r][best.feature] < best.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: best.feature as u8,
            threshold: best.threshold,
            left,
            right,
        };
        idx as u32
    }

    /// Exact greedy search. Pseudo-responses are in {-1, 0, 1}, so every
    /// partial sum is an exact integer and the chosen split does not depend on
    /// row order. Ties go to the lowest feature, then the lowest threshold.
    fn best_split(&self, rows: &[usize]) -> Option<SplitChoice> {
        let n = rows.len();
        let total: f64 = rows.iter().map(|&r| self.signs[r]).sum();
        let parent = total * total / n as f64;
        let min_leaf = self.hp.min_samples_leaf;
        let mut best: Option<SplitChoice> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for feature in 0..FEATURE_COUNT {
            order.sort_by(|&a, &b| self.xs[a][feature].total_cmp(&self.xs[b][feature]).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                left_sum += self.signs[order[i]];
                let n_left = i + 1;
                let lo = self.xs[order[i]][feature];
                let hi = self.xs[order[i + 1]][feature];
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - parent;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mid = lo + (hi - lo) * 0.5;
                    let threshold = if mid > lo { mid } else { hi };
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}
