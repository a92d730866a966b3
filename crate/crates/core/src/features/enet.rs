use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Lasso shrinkage operator `sign(z) max(|z| - gamma, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// `(1/2n)|y - X b|^2 + lambda (alpha |b|_1 + (1 - alpha)/2 |b|^2)`
pub fn elastic_net_objective(x: &DMatrix<f64>, y: &[f64], coef: &[f64], lambda: f64, alpha: f64) -> f64 {
    let n = x.nrows();
    let mut sse = 0.0;
    for i in 0..n {
        let mut fit = 0.0;
        for (j, b) in coef.iter().enumerate() {
            fit += x[(i, j)] * b;
        }
        sse += (y[i] - fit) * (y[i] - fit);
    }
    let l1: f64 = coef.iter().map(|b| b.abs()).sum();
    let l2: f64 = coef.iter().map(|b| b * b).sum();
    sse / (2.0 * n as f64) + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdFit {
    pub coef: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective at the start and after every sweep.
    pub objective: Vec<f64>,
}

/// Cyclic coordinate descent for the elastic net, no intercept.
///
/// Intended for standardized `x` and centered `y`, but valid for any design.
/// Stops once the largest coefficient change in a sweep is below `tol`; when
/// `max_iter` sweeps pass first, the last iterate is returned with
/// `converged = false`.
pub fn fit_elastic_net_cd(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CdFit> {
    let (n, d) = x.shape();
    if n == 0 {
        return Err(Error::EmptyInput("elastic net needs rows"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    if !(lambda >= 0.0) || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "elastic net needs lambda >= 0 and alpha in [0, 1], got {lambda}, {alpha}"
        )));
    }
    let nf = n as f64;
    let cols: Vec<&[f64]> = (0..d)
        .map(|j| &x.as_slice()[j * n..(j + 1) * n])
        .collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);

    let mut coef = vec![0.0; d];
    let mut resid = y.to_vec();
    let mut objective = vec![elastic_net_objective(x, y, &coef, lambda, alpha)];
    let mut sweeps = 0;
    let mut converged = d == 0;
    while !converged && sweeps < max_iter {
        sweeps += 1;
        let mut max_delta: f64 = 0.0;
        for j in 0..d {
            let denom = sq[j] + l2;
            if denom <= 0.0 {
                continue;
            }
            let col = cols[j];
            let old = coef[j];
            let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + sq[j] * old;
            let new = soft_threshold(rho, l1) / denom;
            let delta = new - old;
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(col) {
                    *r -= a * delta;
                }
                coef[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        objective.push(elastic_net_objective(x, y, &coef, lambda, alpha));
        converged = max_delta < tol;
    }
    Ok(CdFit {
        coef,
        sweeps,
        converged,
        objective,
    })
}
