//! Standardization, correlation pruning, regularized importance ranking and
//! kernel density analysis of the meteorological features.

mod enet;
mod kde;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DropReason, DroppedColumn};
use crate::error::{Error, Result};

pub use enet::{elastic_net_objective, fit_elastic_net_cd, soft_threshold, CdFit};
pub use kde::{kde_estimate, silverman_bandwidth, Kde, KdeEstimate};

/// Coefficients below this magnitude count as eliminated.
pub const ZERO_TOLERANCE: f64 = 1e-6;

fn mean_and_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub scale: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(d: &Dataset, names: &[String]) -> Result<Self> {
        let mut mean = Vec::with_capacity(names.len());
        let mut scale = Vec::with_capacity(names.len());
        for name in names {
            let col = d.column(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            let (m, s) = mean_and_std(col);
            if !(s > 0.0) {
                return Err(Error::ConstantColumn(name.clone()));
            }
            mean.push(m);
            scale.push(s);
        }
        Ok(StandardizationParams {
            names: names.to_vec(),
            mean,
            scale,
        })
    }

    pub fn transform_value(&self, feature: usize, x: f64) -> f64 {
        (x - self.mean[feature]) / self.scale[feature]
    }

    pub fn inverse_value(&self, feature: usize, z: f64) -> f64 {
        z * self.scale[feature] + self.mean[feature]
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        let mut out = d.clone();
        for (j, name) in self.names.iter().enumerate() {
            let col = d.column(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            let z = col.iter().map(|&x| self.transform_value(j, x)).collect();
            out = out.with_column(name, z)?;
        }
        Ok(out)
    }
}

/// Rescales each named column to zero mean and unit population standard deviation.
pub fn standardize(d: &Dataset, names: &[String]) -> Result<(Dataset, StandardizationParams)> {
    let params = StandardizationParams::fit(d, names)?;
    Ok((params.apply(d)?, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Row-major, `names.len()` squared.
    pub r: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.names.len() + j]
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let mut header = vec![String::from("feature")];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend((0..self.names.len()).map(|j| self.get(i, j).to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Pearson correlation of every pair of named columns.
///
/// Each entry is computed from its own pair of columns with sums in row
/// order, so the result does not depend on how pairs are scheduled.
pub fn pearson_matrix(d: &Dataset, names: &[String]) -> Result<CorrelationMatrix> {
    if d.n_rows() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two rows"));
    }
    let mut centered = Vec::with_capacity(names.len());
    let mut norms = Vec::with_capacity(names.len());
    for name in names {
        let col = d.column(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
        let (m, _) = mean_and_std(col);
        let c: Vec<f64> = col.iter().map(|x| x - m).collect();
        let ss = c.iter().map(|x| x * x).sum::<f64>();
        if !(ss > 0.0) {
            return Err(Error::ConstantColumn(name.clone()));
        }
        norms.push(ss.sqrt());
        centered.push(c);
    }
    let k = names.len();
    let mut r = vec![0.0; k * k];
    for i in 0..k {
        r[i * k + i] = 1.0;
        for j in (i + 1)..k {
            let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let v = (cov / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            r[i * k + j] = v;
            r[j * k + i] = v;
        }
    }
    Ok(CorrelationMatrix {
        names: names.to_vec(),
        r,
    })
}

/// Greedy scan over pairs `i < j` in column order: when `|r| > threshold` and
/// neither column is already dropped, the later column `j` is dropped.
pub fn prune_correlated(cm: &CorrelationMatrix, threshold: f64) -> Vec<String> {
    let k = cm.names.len();
    let mut dropped = vec![false; k];
    for i in 0..k {
        if dropped[i] {
            continue;
        }
        for j in (i + 1)..k {
            if !dropped[j] && cm.get(i, j).abs() > threshold {
                dropped[j] = true;
            }
        }
    }
    cm.names
        .iter()
        .zip(dropped)
        .filter(|(_, d)| *d)
        .map(|(n, _)| n.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub lasso_coef: f64,
    pub enet_coef: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub features: Vec<FeatureImportance>,
    pub lasso_converged: bool,
    pub enet_converged: bool,
}

impl ImportanceReport {
    pub fn selected(&self) -> Vec<String> {
        self.features
            .iter()
            .filter(|f| f.selected)
            .map(|f| f.name.clone())
            .collect()
    }

    pub fn dropped(&self) -> Vec<DroppedColumn> {
        self.features
            .iter()
            .filter(|f| !f.selected)
            .map(|f| DroppedColumn {
                name: f.name.clone(),
                reason: DropReason::LowImportance,
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(["feature", "lasso_coef", "enet_coef", "selected"])?;
        for f in &self.features {
            w.write_record([
                f.name.clone(),
                f.lasso_coef.to_string(),
                f.enet_coef.to_string(),
                f.selected.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImportanceConfig {
    pub lambda_lasso: f64,
    pub lambda_enet: f64,
    pub alpha_enet: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            lambda_lasso: 0.05,
            lambda_enet: 0.05,
            alpha_enet: 0.5,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Lasso and elastic-net coefficients on standardized features and a
/// standardized target. A feature is kept unless both coefficients vanish.
pub fn rank_importance(
    d: &Dataset,
    names: &[String],
    cfg: &ImportanceConfig,
) -> Result<ImportanceReport> {
    let (std_d, _) = standardize(d, names)?;
    let x = std_d.feature_matrix(names)?;
    let (ym, ys) = mean_and_std(d.target());
    if !(ys > 0.0) {
        return Err(Error::ConstantColumn(d.target_name().to_string()));
    }
    let y: Vec<f64> = d.target().iter().map(|v| (v - ym) / ys).collect();
    let lasso = fit_elastic_net_cd(&x, &y, cfg.lambda_lasso, 1.0, cfg.tol, cfg.max_iter)?;
    let enet = fit_elastic_net_cd(&x, &y, cfg.lambda_enet, cfg.alpha_enet, cfg.tol, cfg.max_iter)?;
    let features = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (l, e) = (lasso.coef[j], enet.coef[j]);
            FeatureImportance {
                name: name.clone(),
                lasso_coef: l,
                enet_coef: e,
                selected: !(l.abs() < ZERO_TOLERANCE && e.abs() < ZERO_TOLERANCE),
            }
        })
        .collect();
    Ok(ImportanceReport {
        features,
        lasso_converged: lasso.converged,
        enet_converged: enet.converged,
    })
}

/// Writes a two-column `x,density` table.
pub fn write_kde_csv<W: Write>(est: &KdeEstimate, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["x", "density"])?;
    for &(x, f) in &est.grid {
        w.write_record([x.to_string(), f.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<kde writer>", e))
}
