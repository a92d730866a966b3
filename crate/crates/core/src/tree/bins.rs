use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_BINS: usize = 255;

/// Per-feature discretization of a training matrix.
///
/// Bin `b` of feature `f` holds values in `(upper_edges[f][b-1], upper_edges[f][b]]`;
/// the last edge is `+inf`. Interior edges sit halfway between the largest
/// value of one bin and the smallest value of the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBins {
    upper_edges: Vec<Vec<f64>>,
    /// `codes[f][row]`
    codes: Vec<Vec<u8>>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

fn feature_edges(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let mut edges = Vec::new();
    if distinct.len() <= max_bins {
        edges.extend(distinct.windows(2).map(|w| midpoint(w[0], w[1])));
    } else {
        let n = sorted.len();
        for q in 1..max_bins {
            let idx = q * n / max_bins;
            if idx == 0 || idx >= n {
                continue;
            }
            let (a, b) = (sorted[idx - 1], sorted[idx]);
            if a < b {
                let m = midpoint(a, b);
                if edges.last().is_none_or(|&l| m > l) {
                    edges.push(m);
                }
            }
        }
    }
    edges.push(f64::INFINITY);
    edges
}

impl HistogramBins {
    pub fn n_features(&self) -> usize {
        self.upper_edges.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.upper_edges[feature].len()
    }

    pub fn upper_edges(&self, feature: usize) -> &[f64] {
        &self.upper_edges[feature]
    }

    pub fn codes(&self, feature: usize) -> &[u8] {
        &self.codes[feature]
    }

    pub fn bin_of(&self, feature: usize, value: f64) -> usize {
        self.upper_edges[feature].partition_point(|&e| e < value)
    }
}

/// Quantile binning, lossless when a feature has at most `max_bins` distinct values.
pub fn build_bins(x: &DMatrix<f64>, max_bins: usize) -> Result<HistogramBins> {
    if !(2..=DEFAULT_MAX_BINS).contains(&max_bins) {
        return Err(Error::invalid(format!("max_bins must be in [2, 255], got {max_bins}")));
    }
    let n = x.nrows();
    let mut upper_edges = Vec::with_capacity(x.ncols());
    let mut codes = Vec::with_capacity(x.ncols());
    for f in 0..x.ncols() {
        let col = &x.as_slice()[f * n..(f + 1) * n];
        let edges = feature_edges(col, max_bins);
        codes.push(
            col.iter()
                .map(|&v| edges.partition_point(|&e| e < v) as u8)
                .collect(),
        );
        upper_edges.push(edges);
    }
    Ok(HistogramBins { upper_edges, codes })
}
