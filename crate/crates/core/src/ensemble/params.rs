//! Hyperparameter records for every model family.
//!
//! Defaults are the tuned values used for the solar benchmark; fields the
//! tuning left unset take the conventional library defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{MaxFeatures, DEFAULT_MAX_BINS};

use super::ModelSpec;

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(msg))
    }
}

fn check_rate(lr: f64) -> Result<()> {
    check(lr > 0.0 && lr.is_finite(), "learning_rate must be > 0")
}

fn check_fraction(f: f64, name: &str) -> Result<()> {
    check(f > 0.0 && f <= 1.0, &format!("{name} must be in (0, 1]"))
}

fn check_tree_counts(min_samples_split: usize, min_samples_leaf: usize) -> Result<()> {
    check(min_samples_split >= 2, "min_samples_split must be >= 2")?;
    check(
        min_samples_leaf >= 1 && min_samples_leaf <= min_samples_split,
        "min_samples_leaf must be in [1, min_samples_split]",
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoostLoss {
    #[default]
    Squared,
    /// Least absolute deviation.
    #[serde(alias = "least_absolute_deviation")]
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdaLoss {
    Linear,
    Square,
    #[default]
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LinearParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RidgeParams {
    pub lambda: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams { lambda: 1.0 }
    }
}

/// Elastic net on standardized features:
/// `(1/2n)|y - Xb|^2 + lambda (alpha |b|_1 + (1 - alpha)/2 |b|^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElasticNetParams {
    pub lambda: f64,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams {
            lambda: 1.0,
            alpha: 0.5,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl ForestParams {
    fn random_forest() -> Self {
        ForestParams {
            n_estimators: 1700,
            max_depth: Some(60),
            min_samples_split: 4,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: false,
        }
    }

    fn validate(&self) -> Result<()> {
        check(self.n_estimators >= 1, "n_estimators must be >= 1")?;
        check_tree_counts(self.min_samples_split, self.min_samples_leaf)
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        Self::random_forest()
    }
}

/// Extra-trees always grow on the whole training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtraTreesParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for ExtraTreesParams {
    fn default() -> Self {
        ExtraTreesParams {
            n_estimators: 1000,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

impl ExtraTreesParams {
    pub fn as_forest(&self) -> ForestParams {
        ForestParams {
            n_estimators: self.n_estimators,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
            bootstrap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub loss: AdaLoss,
    /// Depth of each base tree.
    pub max_depth: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_estimators: 2300,
            learning_rate: 0.03,
            loss: AdaLoss::Exponential,
            max_depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbmParams {
    pub loss: BoostLoss,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    /// Row fraction drawn per stage; 1 disables stochastic boosting.
    pub subsample: f64,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            loss: BoostLoss::Squared,
            learning_rate: 0.1,
            n_estimators: 1500,
            max_depth: Some(10),
            min_samples_split: 12,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XgbParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub reg_lambda: f64,
    pub reg_gamma: f64,
    pub min_child_weight: f64,
}

impl Default for XgbParams {
    fn default() -> Self {
        XgbParams {
            learning_rate: 0.05,
            n_estimators: 1200,
            max_depth: Some(6),
            reg_lambda: 1.0,
            reg_gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

/// Gradient-based one-side sampling booster on histogram splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GossParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// Leaf budget per tree (`num_leaves`).
    pub max_leaves: usize,
    pub max_depth: Option<usize>,
    /// `max_bin`
    pub max_bins: usize,
    /// `min_data_in_leaf`
    pub min_samples_leaf: usize,
    /// `min_sum_hessian_in_leaf`
    pub min_child_weight: f64,
    /// Per-tree feature fraction.
    pub feature_fraction: f64,
    /// `bagging_fraction`: row fraction kept, redrawn every `subsample_freq` stages.
    #[serde(alias = "bagging_fraction")]
    pub subsample: f64,
    #[serde(alias = "bagging_freq")]
    pub subsample_freq: usize,
    /// Fraction of largest-gradient rows always kept.
    pub top_rate: f64,
    /// Fraction of rows sampled from the remainder.
    pub other_rate: f64,
}

impl Default for GossParams {
    fn default() -> Self {
        GossParams {
            learning_rate: 0.05,
            n_estimators: 720,
            max_leaves: 5,
            max_depth: None,
            max_bins: 55,
            min_samples_leaf: 6,
            min_child_weight: 11.0,
            feature_fraction: 0.2319,
            subsample: 0.8,
            subsample_freq: 5,
            top_rate: 0.2,
            other_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistGbmParams {
    pub loss: BoostLoss,
    pub learning_rate: f64,
    pub max_iter: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_leaf_nodes: Option<usize>,
    pub max_bins: usize,
}

impl Default for HistGbmParams {
    fn default() -> Self {
        HistGbmParams {
            loss: BoostLoss::Absolute,
            learning_rate: 0.02,
            max_iter: 750,
            max_depth: Some(40),
            min_samples_leaf: 2,
            max_leaf_nodes: Some(31),
            max_bins: DEFAULT_MAX_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VotingParams {
    pub bases: Vec<ModelSpec>,
    /// Uniform when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Classify-then-average mode: number of quantile classes of base outputs.
    #[serde(default)]
    pub vote_classes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackingParams {
    pub bases: Vec<ModelSpec>,
    #[serde(default = "default_folds")]
    pub n_folds: usize,
}

fn default_folds() -> usize {
    5
}

/// Hyperparameters tagged by model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "hyperparams", rename_all = "snake_case")]
pub enum Hyperparams {
    Linear(LinearParams),
    Ridge(RidgeParams),
    ElasticNet(ElasticNetParams),
    Knn(KnnParams),
    RandomForest(ForestParams),
    ExtraTrees(ExtraTreesParams),
    AdaboostR2(AdaBoostParams),
    Gbm(GbmParams),
    Xgb(XgbParams),
    GossGbm(GossParams),
    HistGbm(HistGbmParams),
    Voting(VotingParams),
    Stacking(StackingParams),
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        match self {
            Hyperparams::Linear(_) => Ok(()),
            Hyperparams::Ridge(p) => check(p.lambda >= 0.0, "ridge lambda must be >= 0"),
            Hyperparams::ElasticNet(p) => {
                check(p.lambda >= 0.0, "elastic net lambda must be >= 0")?;
                check((0.0..=1.0).contains(&p.alpha), "elastic net alpha must be in [0, 1]")?;
                check(p.tol > 0.0 && p.max_iter >= 1, "elastic net tol > 0 and max_iter >= 1")
            }
            Hyperparams::Knn(p) => check(p.k >= 1, "k must be >= 1"),
            Hyperparams::RandomForest(p) => p.validate(),
            Hyperparams::ExtraTrees(p) => p.as_forest().validate(),
            Hyperparams::AdaboostR2(p) => {
                check(p.n_estimators >= 1, "n_estimators must be >= 1")?;
                check_rate(p.learning_rate)?;
                check(p.max_depth >= 1, "max_depth must be >= 1")
            }
            Hyperparams::Gbm(p) => {
                check_rate(p.learning_rate)?;
                check_fraction(p.subsample, "subsample")?;
                check_tree_counts(p.min_samples_split, p.min_samples_leaf)
            }
            Hyperparams::Xgb(p) => {
                check_rate(p.learning_rate)?;
                check(p.reg_lambda >= 0.0 && p.reg_gamma >= 0.0, "reg_lambda, reg_gamma must be >= 0")?;
                check(p.min_child_weight >= 0.0, "min_child_weight must be >= 0")
            }
            Hyperparams::GossGbm(p) => {
                check_rate(p.learning_rate)?;
                check(p.max_leaves >= 2, "max_leaves must be >= 2")?;
                check((2..=DEFAULT_MAX_BINS).contains(&p.max_bins), "max_bins must be in [2, 255]")?;
                check(p.min_samples_leaf >= 1, "min_samples_leaf must be >= 1")?;
                check(p.min_child_weight >= 0.0, "min_child_weight must be >= 0")?;
                check_fraction(p.feature_fraction, "feature_fraction")?;
                check_fraction(p.subsample, "subsample")?;
                check(p.subsample_freq >= 1, "subsample_freq must be >= 1")?;
                check(
                    p.top_rate > 0.0 && p.top_rate < 1.0 && p.other_rate > 0.0 && p.other_rate < 1.0,
                    "top_rate and other_rate must be in (0, 1)",
                )?;
                check(p.top_rate + p.other_rate <= 1.0, "top_rate + other_rate must be <= 1")
            }
            Hyperparams::HistGbm(p) => {
                check_rate(p.learning_rate)?;
                check(p.min_samples_leaf >= 1, "min_samples_leaf must be >= 1")?;
                check(p.max_leaf_nodes.is_none_or(|l| l >= 2), "max_leaf_nodes must be >= 2")?;
                check((2..=DEFAULT_MAX_BINS).contains(&p.max_bins), "max_bins must be in [2, 255]")
            }
            Hyperparams::Voting(p) => {
                check(p.bases.len() >= 2, "voting needs at least two base models")?;
                if let Some(w) = &p.weights {
                    check(w.len() == p.bases.len(), "one voting weight per base model")?;
                    check(
                        w.iter().all(|v| *v >= 0.0 && v.is_finite()) && w.iter().any(|v| *v > 0.0),
                        "voting weights must be >= 0 and not all zero",
                    )?;
                }
                check(p.vote_classes.is_none_or(|m| m >= 1), "vote_classes must be >= 1")?;
                p.bases.iter().try_for_each(|b| b.params.validate())
            }
            Hyperparams::Stacking(p) => {
                check(p.bases.len() >= 2, "stacking needs at least two base models")?;
                check(p.n_folds >= 2, "n_folds must be >= 2")?;
                p.bases.iter().try_for_each(|b| b.params.validate())
            }
        }
    }

    /// Divides tree/stage counts by `divisor` (at least one remains).
    /// Histogram boosting is bounded by `max_iter` rather than an estimator
    /// count and is left unchanged.
    pub fn scale_estimators(&mut self, divisor: usize) {
        let div = |n: &mut usize| *n = (*n / divisor.max(1)).max(1);
        match self {
            Hyperparams::RandomForest(p) => div(&mut p.n_estimators),
            Hyperparams::ExtraTrees(p) => div(&mut p.n_estimators),
            Hyperparams::AdaboostR2(p) => div(&mut p.n_estimators),
            Hyperparams::Gbm(p) => div(&mut p.n_estimators),
            Hyperparams::Xgb(p) => div(&mut p.n_estimators),
            Hyperparams::GossGbm(p) => div(&mut p.n_estimators),
            Hyperparams::Voting(VotingParams { bases, .. })
            | Hyperparams::Stacking(StackingParams { bases, .. }) => {
                bases.iter_mut().for_each(|b| b.params.scale_estimators(divisor))
            }
            _ => {}
        }
    }
}
