//! Voting and stacking combiners, and the non-negative least-squares solver.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{derive_seed, fit_model, ModelSpec, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingState {
    pub bases: Vec<TrainedModel>,
    /// Normalized to sum to one.
    pub weights: Vec<f64>,
    /// Interior class edges over base outputs for classify-then-average voting.
    pub class_edges: Option<Vec<f64>>,
}

impl VotingState {
    pub fn combine(&self, outputs: &[f64]) -> f64 {
        match &self.class_edges {
            None => outputs.iter().zip(&self.weights).map(|(o, w)| o * w).sum(),
            Some(edges) => {
                let class = |v: f64| edges.partition_point(|&e| e < v);
                let mut votes = vec![0.0; edges.len() + 1];
                for (o, w) in outputs.iter().zip(&self.weights) {
                    votes[class(*o)] += w;
                }
                let mut winner = 0;
                for (c, v) in votes.iter().enumerate() {
                    if *v > votes[winner] {
                        winner = c;
                    }
                }
                let (mut num, mut den) = (0.0, 0.0);
                for (o, w) in outputs.iter().zip(&self.weights) {
                    if class(*o) == winner {
                        num += o * w;
                        den += w;
                    }
                }
                if den > 0.0 {
                    num / den
                } else {
                    outputs.iter().sum::<f64>() / outputs.len() as f64
                }
            }
        }
    }
}

fn quantile_edges(values: &mut [f64], m: usize) -> Vec<f64> {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    let mut edges: Vec<f64> = (1..m)
        .map(|q| {
            let pos = q as f64 / m as f64 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
        })
        .collect();
    edges.dedup();
    edges
}

pub(crate) fn fit_voting(
    bases: &[ModelSpec],
    weights: Option<&[f64]>,
    vote_classes: Option<usize>,
    x: &DMatrix<f64>,
    y: &[f64],
    names: &[String],
) -> Result<VotingState> {
    let fitted = bases
        .iter()
        .map(|s| fit_model(s, x, y, names).map(|(m, _)| m))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = weights.map_or_else(|| vec![1.0; bases.len()], |w| w.to_vec());
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let class_edges = match vote_classes {
        None => None,
        Some(m) => {
            let mut all = Vec::with_capacity(y.len() * fitted.len());
            for b in &fitted {
                all.extend(b.predict(x)?);
            }
            Some(quantile_edges(&mut all, m))
        }
    };
    Ok(VotingState {
        bases: fitted,
        weights,
        class_edges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingState {
    pub bases: Vec<TrainedModel>,
    /// Non-negative combiner weights; not normalized.
    pub weights: Vec<f64>,
}

/// Seeded fold assignment: shuffled rows cut into `k` near-equal blocks.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || n < k {
        return Err(Error::FoldTooSmall { n, folds: k });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..k)
        .map(|f| {
            let mut fold = idx[f * n / k..(f + 1) * n / k].to_vec();
            fold.sort_unstable();
            fold
        })
        .collect())
}

fn take_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

pub(crate) fn fit_stacking(
    bases: &[ModelSpec],
    n_folds: usize,
    x: &DMatrix<f64>,
    y: &[f64],
    names: &[String],
    seed: u64,
) -> Result<StackingState> {
    let n = y.len();
    let folds = kfold_indices(n, n_folds, derive_seed(seed, u64::MAX))?;
    let mut z = DMatrix::zeros(n, bases.len());
    for fold in &folds {
        let mut in_fold = vec![false; n];
        fold.iter().for_each(|&i| in_fold[i] = true);
        let train: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
        let xt = take_rows(x, &train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let xh = take_rows(x, fold);
        for (k, spec) in bases.iter().enumerate() {
            let (m, _) = fit_model(spec, &xt, &yt, names)?;
            for (p, &i) in m.predict(&xh)?.iter().zip(fold) {
                z[(i, k)] = *p;
            }
        }
    }
    let weights = nnls_solve(&z, y, None)?;
    let fitted = bases
        .iter()
        .map(|s| fit_model(s, x, y, names).map(|(m, _)| m))
        .collect::<Result<Vec<_>>>()?;
    Ok(StackingState {
        bases: fitted,
        weights,
    })
}

/// `min |y - Z a|^2` subject to `a >= 0` (Lawson-Hanson active set).
///
/// `tol` bounds the KKT residual `max_j (Z^T (y - Z a))_j` over the zero set;
/// by default it is `1e-10 * max(1, |Z^T y|_inf)`.
pub fn nnls_solve(z: &DMatrix<f64>, y: &[f64], tol: Option<f64>) -> Result<Vec<f64>> {
    let (n, m) = z.shape();
    if m == 0 {
        return Err(Error::EmptyInput("nnls needs at least one column"));
    }
    if n != y.len() {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let yv = DVector::from_column_slice(y);
    let zty = z.transpose() * &yv;
    let tol = tol.unwrap_or(1e-10 * zty.amax().max(1.0));
    let mut a = DVector::<f64>::zeros(m);
    let mut passive = vec![false; m];
    let max_outer = 30 * m + 100;

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
        let zp = DMatrix::from_fn(n, cols.len(), |i, k| z[(i, cols[k])]);
        let s = zp
            .svd(true, true)
            .solve(&yv, 1e-13)
            .unwrap_or_else(|_| DVector::zeros(cols.len()));
        let mut full = DVector::zeros(m);
        for (k, &j) in cols.iter().enumerate() {
            full[j] = s[k];
        }
        full
    };

    for _ in 0..max_outer {
        let w = z.transpose() * (&yv - z * &a);
        let candidate = (0..m)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(t) = candidate.filter(|&j| w[j] > tol) else {
            return Ok(a.iter().copied().collect());
        };
        passive[t] = true;
        let mut s = solve_passive(&passive);
        let mut inner = 0;
        while (0..m).any(|j| passive[j] && s[j] <= 0.0) {
            inner += 1;
            if inner > 3 * m + 10 {
                return Err(Error::NotConverged(inner));
            }
            let alpha = (0..m)
                .filter(|&j| passive[j] && s[j] <= 0.0)
                .map(|j| a[j] / (a[j] - s[j]))
                .fold(f64::INFINITY, f64::min);
            a += (&s - &a) * alpha;
            for j in 0..m {
                if passive[j] && a[j] <= 1e-15 * a.amax().max(1.0) {
                    passive[j] = false;
                    a[j] = 0.0;
                }
            }
            s = solve_passive(&passive);
        }
        a = s;
    }
    Err(Error::NotConverged(max_outer))
}
