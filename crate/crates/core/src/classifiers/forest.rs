//! Bagged Gini decision trees.
//!
//! Each tree is grown on its own bootstrap resample and considers
//! `floor(sqrt(n))` randomly chosen features per split; if none of them
//! separates the node, the remaining features are scanned in index order.
//! Candidate splits are evaluated in ascending feature index and ascending
//! threshold, and only a strictly better impurity replaces the incumbent.

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{require_both_classes, Scorer, TrainConfig};
use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::seed::{self, purpose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        positive: bool,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn votes_positive(&self, x: &[f64]) -> bool {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { positive } => return positive,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub feature_count: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn positive_votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.votes_positive(x)).count()
    }
}

impl Scorer for RandomForest {
    fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.positive_votes(x) as f64 / self.trees.len() as f64
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: Vec<&'a [f64]>,
    y: Vec<bool>,
    features_per_split: usize,
    max_depth: Option<usize>,
}

impl Grower<'_> {
    fn best_split_on(&self, feature: usize, rows: &[usize], best: &mut Option<Split>) {
        let mut column: Vec<(f64, bool)> = rows.iter().map(|&r| (self.x[r][feature], self.y[r])).collect();
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = column.len();
        let total_pos = column.iter().filter(|c| c.1).count();
        let mut left_pos = 0;
        for k in 0..total - 1 {
            if column[k].1 {
                left_pos += 1;
            }
            let (lo, hi) = (column[k].0, column[k + 1].0);
            if lo == hi {
                continue;
            }
            let left = k + 1;
            let right = total - left;
            let impurity = (left as f64 * gini(left_pos, left)
                + right as f64 * gini(total_pos - left_pos, right))
                / total as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                *best = Some(Split {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
    }

    fn choose_split(&self, rows: &[usize], rng: &mut seed::Rng) -> Option<Split> {
        let n = self.x[0].len();
        let mut candidates = index::sample(rng, n, self.features_per_split.min(n)).into_vec();
        candidates.sort_unstable();
        let mut best = None;
        for &f in &candidates {
            self.best_split_on(f, rows, &mut best);
        }
        if best.is_none() {
            for f in (0..n).filter(|f| !candidates.contains(f)) {
                self.best_split_on(f, rows, &mut best);
                if best.is_some() {
                    break;
                }
            }
        }
        best
    }

    fn grow(&self, rows: Vec<usize>, rng: &mut seed::Rng) -> DecisionTree {
        let mut nodes = Vec::new();
        // (node slot, rows, depth)
        let mut stack = vec![(0usize, rows, 0usize)];
        nodes.push(TreeNode::Leaf { positive: false });
        while let Some((slot, rows, depth)) = stack.pop() {
            let pos = rows.iter().filter(|&&r| self.y[r]).count();
            let majority = TreeNode::Leaf {
                positive: 2 * pos > rows.len(),
            };
            if pos == 0 || pos == rows.len() || self.max_depth.is_some_and(|d| depth >= d) {
                nodes[slot] = majority;
                continue;
            }
            let Some(split) = self.choose_split(&rows, rng) else {
                nodes[slot] = majority;
                continue;
            };
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| self.x[r][split.feature] <= split.threshold);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(TreeNode::Leaf { positive: false });
            nodes.push(TreeNode::Leaf { positive: false });
            nodes[slot] = TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }
        DecisionTree { nodes }
    }
}

pub fn train_random_forest(train: &LabeledDataset, config: &TrainConfig) -> Result<RandomForest> {
    require_both_classes(train, "random forest")?;
    let n = train.feature_count();
    let grower = Grower {
        x: train.iter().map(|s| s.vector.as_slice()).collect(),
        y: train.iter().map(|s| s.label.is_positive()).collect(),
        features_per_split: ((n as f64).sqrt().floor() as usize).max(1),
        max_depth: config.tree_max_depth,
    };
    let m = train.len();
    let trees = (0..config.tree_count)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::derived_rng(config.seed, &[purpose::TRAIN, t as u64]);
            let rows: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
            grower.grow(rows, &mut rng)
        })
        .collect();
    Ok(RandomForest {
        feature_count: n,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, LabeledSample, UserId};
    use rand::Rng;

    fn random_separable(seed_value: u64, m: usize, n: usize) -> LabeledDataset {
        let mut rng = seed::rng(seed_value);
        let samples = (0..m)
            .map(|_| {
                let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let label = if x[0] + x[1] > 1.0 {
                    Label::Positive
                } else {
                    Label::Negative
                };
                LabeledSample::new(x, label, UserId(0))
            })
            .collect();
        LabeledDataset::new(n, samples).unwrap()
    }

    #[test]
    fn scores_are_vote_fractions() {
        let ds = random_separable(1, 80, 4);
        let forest = train_random_forest(&ds, &TrainConfig::default()).unwrap();
        assert_eq!(forest.trees.len(), 100);
        let mut rng = seed::rng(2);
        for _ in 0..500 {
            let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let s = forest.score_unchecked(&x);
            let scaled = s * 100.0;
            assert!((scaled - scaled.round()).abs() < 1e-9);
            assert_eq!(forest.positive_votes(&x) as f64 / 100.0, s);
        }
    }

    #[test]
    fn fits_separable_training_data() {
        let ds = random_separable(5, 200, 6);
        let forest = train_random_forest(&ds, &TrainConfig::default()).unwrap();
        let correct = ds
            .iter()
            .filter(|s| (forest.score_unchecked(&s.vector) >= 0.5) == s.label.is_positive())
            .count();
        assert!(correct as f64 / ds.len() as f64 >= 0.99);
    }

    #[test]
    fn depth_limit_is_respected() {
        let ds = random_separable(5, 200, 6);
        let config = TrainConfig {
            tree_max_depth: Some(2),
            tree_count: 10,
            ..TrainConfig::default()
        };
        let forest = train_random_forest(&ds, &config).unwrap();
        assert!(forest.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn deterministic_under_seed() {
        let ds = random_separable(8, 60, 3);
        let config = TrainConfig {
            tree_count: 7,
            seed: 42,
            ..TrainConfig::default()
        };
        assert_eq!(
            train_random_forest(&ds, &config).unwrap(),
            train_random_forest(&ds, &config).unwrap()
        );
    }

    #[test]
    fn identical_points_become_majority_leaf() {
        let samples = vec![
            LabeledSample::new(vec![0.5, 0.5], Label::Positive, UserId(0)),
            LabeledSample::new(vec![0.5, 0.5], Label::Positive, UserId(0)),
            LabeledSample::new(vec![0.5, 0.5], Label::Negative, UserId(1)),
        ];
        let ds = LabeledDataset::new(2, samples).unwrap();
        let forest = train_random_forest(&ds, &TrainConfig::default()).unwrap();
        assert!(forest.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn single_class_rejected() {
        let samples = vec![LabeledSample::new(vec![0.5], Label::Negative, UserId(0))];
        let ds = LabeledDataset::new(1, samples).unwrap();
        assert!(train_random_forest(&ds, &TrainConfig::default()).is_err());
    }
}
