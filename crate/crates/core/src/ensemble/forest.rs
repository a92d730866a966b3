//! Random forest, extra-trees and AdaBoost.R2.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{grow, Criterion, GrowSpec, RegressionTree, SplitMode, TreeHyperparams};

use super::boost::BoostStage;
use super::derive_seed;
use super::params::{AdaBoostParams, AdaLoss, ForestParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestState {
    pub trees: Vec<RegressionTree>,
}

impl ForestState {
    pub fn predict_at(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        self.trees.iter().map(|t| t.predict_at(x, row)).sum::<f64>() / self.trees.len() as f64
    }
}

pub(crate) fn fit_forest(
    x: &DMatrix<f64>,
    y: &[f64],
    p: &ForestParams,
    mode: SplitMode,
    seed: u64,
) -> Result<ForestState> {
    let hp = TreeHyperparams {
        max_depth: p.max_depth,
        min_samples_split: p.min_samples_split,
        min_samples_leaf: p.min_samples_leaf,
        max_features: p.max_features,
        split_mode: mode,
        ..Default::default()
    };
    hp.validate()?;
    let n = y.len();
    let ones = vec![1.0; n];
    let features: Vec<usize> = (0..x.ncols()).collect();
    let spec = GrowSpec {
        x,
        bins: None,
        targets: y,
        hess: &ones,
        hp: &hp,
        crit: Criterion::VARIANCE,
        features: &features,
    };
    let trees = (0..p.n_estimators)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j as u64));
            let rows: Vec<usize> = if p.bootstrap {
                let mut r: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                r.sort_unstable();
                r
            } else {
                (0..n).collect()
            };
            grow(&spec, rows, &mut rng).tree
        })
        .collect();
    Ok(ForestState { trees })
}

/// Below this average loss a stage counts as a perfect fit.
pub const PERFECT_FIT_LOSS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostState {
    pub stages: Vec<BoostStage>,
}

/// Smallest prediction whose cumulative weight (ascending order) reaches half the total.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let half = 0.5 * weights.iter().sum::<f64>();
    let mut cum = 0.0;
    for &i in &idx {
        cum += weights[i];
        if cum >= half {
            return values[i];
        }
    }
    values[*idx.last().expect("at least one stage")]
}

impl AdaBoostState {
    pub fn predict_at(&self, x: &DMatrix<f64>, row: usize, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(self.stages.iter().map(|s| s.tree.predict_at(x, row)));
        let w: Vec<f64> = self.stages.iter().map(|s| s.stage_weight).collect();
        weighted_median(buf, &w)
    }
}

/// AdaBoost.R2 with trace of the sample-weight sums (one per completed round).
pub(crate) fn fit_adaboost(
    x: &DMatrix<f64>,
    y: &[f64],
    p: &AdaBoostParams,
    seed: u64,
) -> Result<(AdaBoostState, Vec<f64>)> {
    let hp = TreeHyperparams {
        max_depth: Some(p.max_depth),
        ..Default::default()
    };
    let n = y.len();
    let ones = vec![1.0; n];
    let features: Vec<usize> = (0..x.ncols()).collect();
    let spec = GrowSpec {
        x,
        bins: None,
        targets: y,
        hess: &ones,
        hp: &hp,
        crit: Criterion::VARIANCE,
        features: &features,
    };
    let mut w = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    let mut weight_sums = Vec::new();
    let mut pred = vec![0.0; n];
    for t in 0..p.n_estimators {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let dist = WeightedIndex::new(&w).map_err(|e| Error::invalid(format!("sample weights: {e}")))?;
        let mut rows: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        rows.sort_unstable();
        let tree = grow(&spec, rows, &mut rng).tree;

        for (i, pi) in pred.iter_mut().enumerate() {
            *pi = tree.predict_at(x, i);
        }
        let err: Vec<f64> = pred.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
        let max_err = err.iter().copied().fold(0.0, f64::max);
        let losses: Vec<f64> = err
            .iter()
            .map(|&e| {
                let l = if max_err > 0.0 { e / max_err } else { 0.0 };
                match p.loss {
                    AdaLoss::Linear => l,
                    AdaLoss::Square => l * l,
                    AdaLoss::Exponential => 1.0 - (-l).exp(),
                }
            })
            .collect();
        let avg: f64 = losses.iter().zip(&w).map(|(l, wi)| l * wi).sum();

        if avg < PERFECT_FIT_LOSS {
            stages.push(BoostStage { tree, stage_weight: 1.0 });
            break;
        }
        if avg >= 0.5 {
            if stages.is_empty() {
                stages.push(BoostStage { tree, stage_weight: 1.0 });
            }
            break;
        }
        let beta = avg / (1.0 - avg);
        stages.push(BoostStage {
            tree,
            stage_weight: (1.0 / beta).ln(),
        });
        for (wi, l) in w.iter_mut().zip(&losses) {
            *wi *= beta.powf((1.0 - l) * p.learning_rate);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= total);
        weight_sums.push(w.iter().sum());
    }
    Ok((AdaBoostState { stages }, weight_sums))
}
