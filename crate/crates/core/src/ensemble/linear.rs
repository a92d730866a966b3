//! Linear baselines and k-nearest neighbours.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::fit_elastic_net_cd;

use super::params::{ElasticNetParams, KnnParams};

/// Ridge fallback when the plain normal equations are singular.
pub const FALLBACK_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearState {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearState {
    pub fn predict_at(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        self.coef
            .iter()
            .enumerate()
            .fold(self.intercept, |acc, (j, b)| acc + b * x[(row, j)])
    }
}

fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

/// Minimizes `|y - Xb - c|^2 + lambda |b|^2` with an unpenalized intercept `c`.
/// `lambda = 0` is ordinary least squares, retried with a tiny ridge when singular.
pub(crate) fn fit_ridge(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<LinearState> {
    let (n, d) = x.shape();
    let xm = column_means(x);
    let ym = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - xm[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ym));
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * yc;

    let solve = |lam: f64| {
        let mut a = gram.clone();
        for j in 0..d {
            a[(j, j)] += lam;
        }
        a.cholesky().map(|c| c.solve(&rhs))
    };
    let beta = match solve(lambda) {
        Some(b) => b,
        None if lambda < FALLBACK_RIDGE => solve(FALLBACK_RIDGE).ok_or(Error::DegenerateDesign)?,
        None => return Err(Error::DegenerateDesign),
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::DegenerateDesign);
    }
    let intercept = ym - beta.iter().zip(&xm).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearState {
        intercept,
        coef: beta.iter().copied().collect(),
    })
}

/// Elastic net fitted on standardized columns, reported on the original scale.
/// Constant columns get a zero coefficient.
pub(crate) fn fit_elastic_net(x: &DMatrix<f64>, y: &[f64], p: &ElasticNetParams) -> Result<LinearState> {
    let (n, d) = x.shape();
    let xm = column_means(x);
    let sd: Vec<f64> = (0..d)
        .map(|j| (x.column(j).iter().map(|v| (v - xm[j]).powi(2)).sum::<f64>() / n as f64).sqrt())
        .collect();
    let scale: Vec<f64> = sd.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect();
    let xs = DMatrix::from_fn(n, d, |i, j| (x[(i, j)] - xm[j]) / scale[j]);
    let ym = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let fit = fit_elastic_net_cd(&xs, &yc, p.lambda, p.alpha, p.tol, p.max_iter)?;
    let coef: Vec<f64> = fit.coef.iter().zip(&scale).map(|(b, s)| b / s).collect();
    let intercept = ym - coef.iter().zip(&xm).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearState { intercept, coef })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnState {
    pub k: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Standardized training rows, row-major.
    pub train: Vec<f64>,
    pub targets: Vec<f64>,
}

pub(crate) fn fit_knn(x: &DMatrix<f64>, y: &[f64], p: &KnnParams) -> Result<KnnState> {
    let (n, d) = x.shape();
    if p.k > n {
        return Err(Error::KTooLarge { k: p.k, n });
    }
    let mean = column_means(x);
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let s = (x.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n as f64).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut train = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            train.push((x[(i, j)] - mean[j]) / scale[j]);
        }
    }
    Ok(KnnState {
        k: p.k,
        mean,
        scale,
        train,
        targets: y.to_vec(),
    })
}

impl KnnState {
    /// Mean target of the `k` nearest training rows; equal distances prefer the lower row index.
    pub fn predict_at(&self, x: &DMatrix<f64>, row: usize, buf: &mut Vec<(f64, usize)>) -> f64 {
        let d = self.mean.len();
        let q: Vec<f64> = (0..d).map(|j| (x[(row, j)] - self.mean[j]) / self.scale[j]).collect();
        buf.clear();
        for (i, r) in self.train.chunks_exact(d.max(1)).enumerate() {
            let dist: f64 = r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            buf.push((dist, i));
        }
        if d == 0 {
            buf.clear();
            buf.extend((0..self.targets.len()).map(|i| (0.0, i)));
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = self.k;
        if k < buf.len() {
            buf.select_nth_unstable_by(k - 1, cmp);
        }
        buf[..k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64
    }
}
