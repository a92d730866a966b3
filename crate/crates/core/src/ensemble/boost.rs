//! Gradient boosting: exact (GBM), second-order (XGB), one-side sampled (GOSS)
//! and histogram variants share one stage loop.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tree::{
    build_bins, grow, Criterion, GrowSpec, HistogramBins, MaxFeatures, RegressionTree, SplitMode,
    TreeHyperparams,
};

use super::derive_seed;
use super::params::{BoostLoss, GbmParams, GossParams, HistGbmParams, XgbParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub tree: RegressionTree,
    pub stage_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostState {
    pub init: f64,
    pub stages: Vec<BoostStage>,
}

impl BoostState {
    pub fn predict_at(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        self.stages
            .iter()
            .fold(self.init, |acc, s| acc + s.stage_weight * s.tree.predict_at(x, row))
    }
}

#[derive(Debug, Clone, Copy)]
enum Sampling {
    All,
    Subsample { fraction: f64, every: usize },
    Goss { top: f64, other: f64, bag: f64, every: usize },
}

struct Engine {
    loss: BoostLoss,
    learning_rate: f64,
    n_stages: usize,
    tree: TreeHyperparams,
    crit: Criterion,
    sampling: Sampling,
    /// Per-tree feature fraction.
    feature_fraction: Option<f64>,
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Training loss: mean squared error or mean absolute error.
pub(crate) fn loss_value(loss: BoostLoss, y: &[f64], f: &[f64]) -> f64 {
    let n = y.len() as f64;
    match loss {
        BoostLoss::Squared => y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n,
        BoostLoss::Absolute => y.iter().zip(f).map(|(a, b)| (a - b).abs()).sum::<f64>() / n,
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Keeps the `ceil(top n)` rows of largest |gradient| and `ceil(other n)` of the
/// rest at random; the random ones get weight `(1 - top) / other`.
pub(crate) fn goss_sample<R: Rng>(
    rows: &[usize],
    grad: &[f64],
    top: f64,
    other: f64,
    rng: &mut R,
) -> (Vec<usize>, Vec<(usize, f64)>) {
    let n = rows.len();
    let n_top = ((top * n as f64).ceil() as usize).min(n);
    let n_other = ((other * n as f64).ceil() as usize).min(n - n_top);
    let mut order = rows.to_vec();
    order.sort_by(|&a, &b| grad[b].abs().total_cmp(&grad[a].abs()).then(a.cmp(&b)));
    let rest = &order[n_top..];
    let factor = (1.0 - top) / other;
    let mut picked: Vec<usize> = index::sample(rng, rest.len(), n_other)
        .into_iter()
        .map(|i| rest[i])
        .collect();
    picked.sort_unstable();
    let mut kept = order[..n_top].to_vec();
    kept.sort_unstable();
    (kept, picked.into_iter().map(|r| (r, factor)).collect())
}

fn run(engine: &Engine, x: &DMatrix<f64>, y: &[f64], bins: Option<&HistogramBins>, seed: u64) -> (BoostState, Vec<f64>) {
    let n = y.len();
    let d = x.ncols();
    let init = match engine.loss {
        BoostLoss::Squared => y.iter().sum::<f64>() / n as f64,
        BoostLoss::Absolute => median(&mut y.to_vec()),
    };
    let mut f = vec![init; n];
    let mut history = vec![loss_value(engine.loss, y, &f)];
    let mut stages = Vec::with_capacity(engine.n_stages);
    let all_rows: Vec<usize> = (0..n).collect();
    let all_features: Vec<usize> = (0..d).collect();
    let mut bag = all_rows.clone();
    let mut resid = vec![0.0; n];
    let mut targets = vec![0.0; n];
    let mut hess = vec![1.0; n];

    for t in 0..engine.n_stages {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        for i in 0..n {
            resid[i] = y[i] - f[i];
            targets[i] = match engine.loss {
                BoostLoss::Squared => resid[i],
                BoostLoss::Absolute => sign(resid[i]),
            };
        }
        let rows = match engine.sampling {
            Sampling::All => all_rows.clone(),
            Sampling::Subsample { fraction, every } => {
                if t % every == 0 {
                    bag = draw_bag(n, fraction, &mut rng);
                }
                bag.clone()
            }
            Sampling::Goss { top, other, bag: fraction, every } => {
                if t % every == 0 {
                    bag = draw_bag(n, fraction, &mut rng);
                }
                hess.fill(1.0);
                let (mut kept, sampled) = goss_sample(&bag, &targets, top, other, &mut rng);
                for &(r, w) in &sampled {
                    hess[r] = w;
                }
                kept.extend(sampled.iter().map(|&(r, _)| r));
                kept.sort_unstable();
                kept
            }
        };
        let features = match engine.feature_fraction {
            Some(frac) => {
                let k = MaxFeatures::Fraction(frac).resolve(d);
                let mut fs: Vec<usize> = index::sample(&mut rng, d, k).into_iter().collect();
                fs.sort_unstable();
                fs
            }
            None => all_features.clone(),
        };
        let spec = GrowSpec {
            x,
            bins,
            targets: &targets,
            hess: &hess,
            hp: &engine.tree,
            crit: engine.crit,
            features: &features,
        };
        let grown = grow(&spec, rows, &mut rng);
        let mut tree = grown.tree;
        if engine.loss == BoostLoss::Absolute {
            let mut buf = Vec::new();
            for (leaf, leaf_rows) in &grown.leaf_rows {
                buf.clear();
                buf.extend(leaf_rows.iter().map(|&r| resid[r]));
                tree.set_leaf_value(*leaf, median(&mut buf));
            }
        }
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += engine.learning_rate * tree.predict_at(x, i);
        }
        history.push(loss_value(engine.loss, y, &f));
        stages.push(BoostStage {
            tree,
            stage_weight: engine.learning_rate,
        });
    }
    (BoostState { init, stages }, history)
}

fn draw_bag<R: Rng>(n: usize, fraction: f64, rng: &mut R) -> Vec<usize> {
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rows = index::sample(rng, n, k).into_vec();
    rows.sort_unstable();
    rows
}

fn sampling(subsample: f64, every: usize) -> Sampling {
    if subsample < 1.0 {
        Sampling::Subsample { fraction: subsample, every }
    } else {
        Sampling::All
    }
}

pub(crate) fn fit_gbm(x: &DMatrix<f64>, y: &[f64], p: &GbmParams, seed: u64) -> Result<(BoostState, Vec<f64>)> {
    let engine = Engine {
        loss: p.loss,
        learning_rate: p.learning_rate,
        n_stages: p.n_estimators,
        tree: TreeHyperparams {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features: p.max_features,
            split_mode: SplitMode::Exact,
            ..Default::default()
        },
        crit: Criterion::VARIANCE,
        sampling: sampling(p.subsample, 1),
        feature_fraction: None,
    };
    engine.tree.validate()?;
    Ok(run(&engine, x, y, None, seed))
}

pub(crate) fn fit_xgb(x: &DMatrix<f64>, y: &[f64], p: &XgbParams, seed: u64) -> Result<(BoostState, Vec<f64>)> {
    let engine = Engine {
        loss: BoostLoss::Squared,
        learning_rate: p.learning_rate,
        n_stages: p.n_estimators,
        tree: TreeHyperparams {
            max_depth: p.max_depth,
            min_child_weight: p.min_child_weight,
            ..Default::default()
        },
        crit: Criterion::second_order(p.reg_lambda, p.reg_gamma),
        sampling: Sampling::All,
        feature_fraction: None,
    };
    engine.tree.validate()?;
    Ok(run(&engine, x, y, None, seed))
}

pub(crate) fn fit_goss(x: &DMatrix<f64>, y: &[f64], p: &GossParams, seed: u64) -> Result<(BoostState, Vec<f64>)> {
    let engine = Engine {
        loss: BoostLoss::Squared,
        learning_rate: p.learning_rate,
        n_stages: p.n_estimators,
        tree: TreeHyperparams {
            max_depth: p.max_depth,
            min_samples_split: (2 * p.min_samples_leaf).max(2),
            min_samples_leaf: p.min_samples_leaf,
            split_mode: SplitMode::Histogram,
            max_leaves: Some(p.max_leaves),
            min_child_weight: p.min_child_weight,
            max_bins: p.max_bins,
            ..Default::default()
        },
        crit: Criterion::VARIANCE,
        sampling: Sampling::Goss {
            top: p.top_rate,
            other: p.other_rate,
            bag: p.subsample,
            every: p.subsample_freq,
        },
        feature_fraction: (p.feature_fraction < 1.0).then_some(p.feature_fraction),
    };
    engine.tree.validate()?;
    let bins = build_bins(x, p.max_bins)?;
    Ok(run(&engine, x, y, Some(&bins), seed))
}

pub(crate) fn fit_hist_gbm(x: &DMatrix<f64>, y: &[f64], p: &HistGbmParams, seed: u64) -> Result<(BoostState, Vec<f64>)> {
    let engine = Engine {
        loss: p.loss,
        learning_rate: p.learning_rate,
        n_stages: p.max_iter,
        tree: TreeHyperparams {
            max_depth: p.max_depth,
            min_samples_split: (2 * p.min_samples_leaf).max(2),
            min_samples_leaf: p.min_samples_leaf,
            split_mode: SplitMode::Histogram,
            max_leaves: p.max_leaf_nodes,
            max_bins: p.max_bins,
            ..Default::default()
        },
        crit: Criterion::VARIANCE,
        sampling: Sampling::All,
        feature_fraction: None,
    };
    engine.tree.validate()?;
    let bins = build_bins(x, p.max_bins)?;
    Ok(run(&engine, x, y, Some(&bins), seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DMatrix<f64>, Vec<f64>) {
        let n = 40;
        let x = DMatrix::from_fn(n, 2, |i, j| ((i * (j + 3) * 7) % 23) as f64);
        let y = (0..n).map(|i| (x[(i, 0)] * 0.5 - x[(i, 1)]).sin() * 10.0 + x[(i, 0)]).collect();
        (x, y)
    }

    #[test]
    fn zero_stages_predict_the_mean() {
        let (x, y) = toy();
        let p = GbmParams {
            n_estimators: 0,
            ..Default::default()
        };
        let (s, h) = fit_gbm(&x, &y, &p, 1).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_eq!(s.predict_at(&x, 3), mean);
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn full_stage_fits_distinct_rows() {
        let x = DMatrix::from_column_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [3.0, -1.0, 4.0, 1.0, 5.0];
        let p = GbmParams {
            n_estimators: 1,
            learning_rate: 1.0,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let (s, _) = fit_gbm(&x, &y, &p, 0).unwrap();
        for (i, t) in y.iter().enumerate() {
            assert!((s.predict_at(&x, i) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn training_loss_never_increases() {
        let (x, y) = toy();
        let (_, h) = fit_gbm(&x, &y, &GbmParams { n_estimators: 30, ..Default::default() }, 5).unwrap();
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
        let p = HistGbmParams {
            max_iter: 30,
            ..Default::default()
        };
        let (_, h) = fit_hist_gbm(&x, &y, &p, 5).unwrap();
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
        let (_, h) = fit_xgb(&x, &y, &XgbParams { n_estimators: 30, ..Default::default() }, 5).unwrap();
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn goss_counts_and_amplification() {
        let grad: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rows: Vec<usize> = (0..10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (kept, sampled) = goss_sample(&rows, &grad, 0.2, 0.1, &mut rng);
        assert_eq!(kept, vec![8, 9]);
        assert_eq!(sampled.len(), 1);
        assert_eq!(sampled[0].1, 8.0);
        assert!(sampled[0].0 < 8);
    }

    #[test]
    fn huge_gamma_gives_single_leaf_stages() {
        let (x, y) = toy();
        let p = XgbParams {
            n_estimators: 3,
            reg_gamma: 1e12,
            ..Default::default()
        };
        let (s, _) = fit_xgb(&x, &y, &p, 0).unwrap();
        assert!(s.stages.iter().all(|st| st.tree.n_leaves() == 1));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
