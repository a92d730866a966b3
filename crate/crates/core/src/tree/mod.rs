//! CART regression trees with exact, random-cut and histogram split search.

mod bins;
mod grow;
mod split;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bins::{build_bins, HistogramBins, DEFAULT_MAX_BINS};
pub(crate) use grow::{grow, GrowSpec};
pub use split::{best_split_exact, best_split_histogram, BinStat, Criterion, SplitCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    /// `ceil(sqrt(d))`
    Sqrt,
    Fixed(usize),
    /// `max(1, ceil(fraction * d))`
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(&self, d: usize) -> usize {
        let k = match *self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::Fixed(k) => k,
            MaxFeatures::Fraction(f) => (f * d as f64).ceil() as usize,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Exact,
    /// One uniformly drawn threshold per candidate feature (extra-trees).
    RandomCut,
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeHyperparams {
    /// `None` grows until another stop rule fires.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub split_mode: SplitMode,
    /// Best-first growth stops at this many leaves.
    pub max_leaves: Option<usize>,
    /// Minimum weight (hessian) sum per child.
    pub min_child_weight: f64,
    /// Used by histogram mode when `fit_cart` bins the data itself.
    pub max_bins: usize,
}

impl Default for TreeHyperparams {
    fn default() -> Self {
        TreeHyperparams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            split_mode: SplitMode::Exact,
            max_leaves: None,
            min_child_weight: 0.0,
            max_bins: DEFAULT_MAX_BINS,
        }
    }
}

impl TreeHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::invalid("min_samples_split must be >= 2"));
        }
        if self.min_samples_leaf < 1 || self.min_samples_leaf > self.min_samples_split {
            return Err(Error::invalid(
                "min_samples_leaf must be in [1, min_samples_split]",
            ));
        }
        if self.max_leaves.is_some_and(|l| l < 2) {
            return Err(Error::invalid("max_leaves must be >= 2"));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid("max_features fraction must be in (0, 1]"));
            }
        }
        if matches!(self.max_features, MaxFeatures::Fixed(0)) {
            return Err(Error::invalid("max_features must be >= 1"));
        }
        if !(self.min_child_weight >= 0.0) {
            return Err(Error::invalid("min_child_weight must be >= 0"));
        }
        if !(2..=DEFAULT_MAX_BINS).contains(&self.max_bins) {
            return Err(Error::invalid("max_bins must be in [2, 255]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

/// Binary regression tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    n_features: usize,
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub(crate) fn from_nodes(n_features: usize, nodes: Vec<TreeNode>) -> Self {
        RegressionTree { n_features, nodes }
    }

    pub fn leaf(n_features: usize, value: f64, n_samples: usize) -> Self {
        RegressionTree {
            n_features,
            nodes: vec![TreeNode::Leaf { value, n_samples }],
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub(crate) fn set_leaf_value(&mut self, node: usize, v: f64) {
        if let TreeNode::Leaf { value, .. } = &mut self.nodes[node] {
            *value = v;
        }
    }

    /// Index of the leaf reached by `x`. Samples with `x[feature] <= threshold` go left.
    pub fn leaf_index(&self, x: impl Fn(usize) -> f64) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x(feature) <= threshold { left } else { right },
            }
        }
    }

    fn leaf_value(&self, i: usize) -> f64 {
        match self.nodes[i] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.leaf_value(self.leaf_index(|f| x[f])))
    }

    /// Prediction for row `row` of a column-major matrix; no arity check.
    pub(crate) fn predict_at(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        self.leaf_value(self.leaf_index(|f| x[(row, f)]))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok((0..x.nrows()).map(|i| self.predict_at(x, i)).collect())
    }
}

pub(crate) fn check_xy(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("no training rows"));
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    Ok(())
}

/// Fits one weighted CART regression tree.
///
/// Leaves predict the weighted mean of their targets. `seed` drives feature
/// subsampling and random cuts; identical inputs give identical trees.
pub fn fit_cart(
    x: &DMatrix<f64>,
    y: &[f64],
    weights: &[f64],
    hp: &TreeHyperparams,
    seed: u64,
) -> Result<RegressionTree> {
    check_xy(x, y)?;
    hp.validate()?;
    if weights.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::invalid("weights must be >= 0 and not all zero"));
    }
    let bins = match hp.split_mode {
        SplitMode::Histogram => Some(build_bins(x, hp.max_bins)?),
        _ => None,
    };
    let features: Vec<usize> = (0..x.ncols()).collect();
    let spec = GrowSpec {
        x,
        bins: bins.as_ref(),
        targets: y,
        hess: weights,
        hp,
        crit: Criterion::VARIANCE,
        features: &features,
    };
    let rows: Vec<usize> = (0..y.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(grow(&spec, rows, &mut rng).tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let t = fit_cart(&x, &[0.1; 4], &[1.0; 4], &TreeHyperparams::default(), 0).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert!((t.predict_row(&[9.0]).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn step_tree_routing() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let y = [0.0, 0.0, 10.0, 10.0];
        let hp = TreeHyperparams {
            max_depth: Some(1),
            ..Default::default()
        };
        let t = fit_cart(&x, &y, &[1.0; 4], &hp, 0).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict_row(&[2.0]).unwrap(), 0.0);
        assert_eq!(t.predict_row(&[3.0]).unwrap(), 10.0);
        assert_eq!(t.predict_row(&[2.5]).unwrap(), 0.0);
        assert_eq!(t.predict(&x).unwrap(), y.to_vec());
        assert!(matches!(
            t.predict_row(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn unlimited_tree_interpolates_distinct_rows() {
        let x = DMatrix::from_fn(60, 2, |i, j| ((i * 31 + j * 17) % 60) as f64 + j as f64 * 0.5);
        let y: Vec<f64> = (0..60).map(|i| ((i * 7919) % 97) as f64 / 7.0).collect();
        let t = fit_cart(&x, &y, &[1.0; 60], &TreeHyperparams::default(), 3).unwrap();
        assert_eq!(t.predict(&x).unwrap(), y);
    }

    #[test]
    fn max_leaves_caps_growth() {
        let x = col(&(0..50).map(|i| i as f64).collect::<Vec<_>>());
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let hp = TreeHyperparams {
            max_leaves: Some(5),
            ..Default::default()
        };
        let t = fit_cart(&x, &y, &[1.0; 50], &hp, 0).unwrap();
        assert_eq!(t.n_leaves(), 5);
    }

    #[test]
    fn hyperparameter_validation() {
        let bad = TreeHyperparams {
            min_samples_leaf: 5,
            min_samples_split: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(TreeHyperparams::default().validate().is_ok());
        assert_eq!(MaxFeatures::Sqrt.resolve(9), 3);
        assert_eq!(MaxFeatures::Sqrt.resolve(10), 4);
        assert_eq!(MaxFeatures::Fraction(0.2319).resolve(9), 3);
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let x = col(&[1.0, 2.0, 3.0]);
        let t = fit_cart(&x, &[1.0, 100.0, 3.0], &[1.0, 0.0, 1.0], &TreeHyperparams::default(), 0)
            .unwrap();
        assert_eq!(t.predict_row(&[1.0]).unwrap(), 1.0);
        assert_eq!(t.predict_row(&[3.0]).unwrap(), 3.0);
        assert!(fit_cart(&x, &[1.0; 3], &[0.0; 3], &TreeHyperparams::default(), 0).is_err());
    }
}
