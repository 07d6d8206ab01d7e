//! Random forest of CART trees: Gini splits on axis-aligned thresholds,
//! bootstrap sampling per tree, majority vote.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::util::derive_seed;

/// Forest hyperparameters. Defaults follow the study protocol: Gini
/// impurity, depth cap 5, minimum split size 2; the tree count is a
/// conventional 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 5,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

/// One CART tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    root: TreeNode,
    min_split: Option<usize>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Number of split levels on the deepest path.
    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    /// Smallest sample count at which any split was made, for contract
    /// checks; `None` when the tree is a single leaf.
    pub fn min_split_size(&self) -> Option<usize> {
        self.min_split
    }
}

/// Gini impurity of a class-count histogram: `1 - sum(p_k^2)`.
pub fn gini_impurity(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn majority_class(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct TreeBuilder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [usize],
    n_classes: usize,
    cfg: &'a ForestConfig,
    min_split_seen: Option<usize>,
}

impl<'a> TreeBuilder<'a> {
    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx {
            counts[self.ys[i]] += 1;
        }
        counts
    }

    fn build(&mut self, idx: &mut Vec<usize>, depth: usize) -> TreeNode {
        let counts = self.class_counts(idx);
        let impurity = gini_impurity(&counts);
        if depth >= self.cfg.max_depth
            || idx.len() < self.cfg.min_samples_split
            || impurity == 0.0
        {
            return TreeNode::Leaf {
                class: majority_class(&counts),
            };
        }

        let n_features = self.xs[0].len();
        let mut best: Option<(f64, usize, f64)> = None; // (weighted gini, feature, threshold)
        let mut order: Vec<usize> = idx.clone();
        for f in 0..n_features {
            order.sort_by(|&a, &b| {
                self.xs[a][f]
                    .partial_cmp(&self.xs[b][f])
                    .expect("finite features")
            });
            let mut left_counts = vec![0usize; self.n_classes];
            let mut right_counts = self.class_counts(&order);
            let total = order.len() as f64;
            for cut in 1..order.len() {
                let moved = order[cut - 1];
                left_counts[self.ys[moved]] += 1;
                right_counts[self.ys[moved]] -= 1;
                let (lo, hi) = (self.xs[order[cut - 1]][f], self.xs[order[cut]][f]);
                if lo == hi {
                    continue;
                }
                let nl = cut as f64;
                let nr = total - nl;
                let score =
                    (nl * gini_impurity(&left_counts) + nr * gini_impurity(&right_counts)) / total;
                if best.map_or(true, |(b, _, _)| score < b) {
                    best = Some((score, f, 0.5 * (lo + hi)));
                }
            }
        }

        let Some((score, feature, threshold)) = best else {
            // Every feature is constant on this node.
            return TreeNode::Leaf {
                class: majority_class(&counts),
            };
        };
        if score >= impurity {
            return TreeNode::Leaf {
                class: majority_class(&counts),
            };
        }

        self.min_split_seen = Some(match self.min_split_seen {
            Some(m) => m.min(idx.len()),
            None => idx.len(),
        });
        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.xs[i][feature] <= threshold);
        let left = self.build(&mut left_idx, depth + 1);
        let right = self.build(&mut right_idx, depth + 1);
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<TreeWithMeta>,
    pub n_classes: usize,
    pub config: ForestConfig,
}

/// A tree plus the smallest node size it ever split, kept for contract
/// verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeWithMeta {
    root: TreeNode,
    min_split: Option<usize>,
}

impl TreeWithMeta {
    pub fn as_tree(&self) -> DecisionTree {
        DecisionTree {
            root: self.root.clone(),
            min_split: self.min_split,
        }
    }
}

/// Trains a forest on explicit feature/class arrays.
pub fn rf_train_raw(
    xs: &[Vec<f64>],
    ys: &[usize],
    n_classes: usize,
    cfg: &ForestConfig,
) -> Result<RandomForest, BaselineError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(BaselineError::EmptyTraining);
    }
    if cfg.n_trees == 0 || cfg.max_depth == 0 {
        return Err(BaselineError::BadConfig(
            "forest needs n_trees >= 1 and max_depth >= 1".into(),
        ));
    }
    let n = xs.len();
    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, t as u64));
            let mut bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                xs,
                ys,
                n_classes,
                cfg,
                min_split_seen: None,
            };
            let root = builder.build(&mut bootstrap, 0);
            TreeWithMeta {
                root,
                min_split: builder.min_split_seen,
            }
        })
        .collect();
    Ok(RandomForest {
        trees,
        n_classes,
        config: *cfg,
    })
}

impl RandomForest {
    /// Majority vote over trees; ties resolve to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.as_tree().predict(x)] += 1;
        }
        majority_class(&votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_hand_case() {
        // (3, 1) node: 1 - (9/16 + 1/16) = 0.375, checked against the
        // brute-force probability form.
        assert_eq!(gini_impurity(&[3, 1]), 0.375);
        let brute = {
            let probs = [3.0 / 4.0, 1.0 / 4.0];
            1.0 - probs.iter().map(|p| p * p).sum::<f64>()
        };
        assert!((gini_impurity(&[3, 1]) - brute).abs() < 1e-15);
        assert_eq!(gini_impurity(&[4, 0]), 0.0);
        assert_eq!(gini_impurity(&[]), 0.0);
        assert!((gini_impurity(&[1, 1]) - 0.5).abs() < 1e-15);
    }

    fn separable_1d(n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 } * (1.0 + i as f64 / n as f64)])
            .collect();
        let ys: Vec<usize> = (0..n).map(|i| i % 2).collect();
        (xs, ys)
    }

    #[test]
    fn perfectly_separable_toy_reaches_full_accuracy() {
        let (xs, ys) = separable_1d(40);
        let forest = rf_train_raw(&xs, &ys, 2, &ForestConfig::with_seed(3)).unwrap();
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| forest.predict(x) == y)
            .count();
        assert_eq!(correct, xs.len());
    }

    #[test]
    fn forest_is_deterministic_per_seed() {
        let (xs, ys) = separable_1d(30);
        let a = rf_train_raw(&xs, &ys, 2, &ForestConfig::with_seed(9)).unwrap();
        let b = rf_train_raw(&xs, &ys, 2, &ForestConfig::with_seed(9)).unwrap();
        assert_eq!(a, b);
        // And identical predictions on 100 random probes.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = vec![rng.gen_range(-3.0..3.0)];
            assert_eq!(a.predict(&x), b.predict(&x));
        }
        let c = rf_train_raw(&xs, &ys, 2, &ForestConfig::with_seed(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn depth_and_split_contracts_hold() {
        // Noise labels force deep trees; the caps must still hold exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let ys: Vec<usize> = (0..200).map(|_| rng.gen_range(0..4usize)).collect();
        let cfg = ForestConfig {
            n_trees: 20,
            max_depth: 5,
            min_samples_split: 8,
            seed: 2,
        };
        let forest = rf_train_raw(&xs, &ys, 4, &cfg).unwrap();
        for tree in &forest.trees {
            let t = tree.as_tree();
            assert!(t.depth() <= cfg.max_depth);
            if let Some(m) = t.min_split_size() {
                assert!(m >= cfg.min_samples_split, "split on {m} samples");
            }
        }
    }

    #[test]
    fn pure_nodes_become_leaves() {
        let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
        let ys = vec![1, 1, 1];
        let forest = rf_train_raw(&xs, &ys, 2, &ForestConfig::with_seed(0)).unwrap();
        for tree in &forest.trees {
            assert_eq!(tree.as_tree().depth(), 0);
        }
        assert_eq!(forest.predict(&[5.0]), 1);
    }
}
