//! Train/test splitting, error metrics, timing and model comparison.

mod compare;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use compare::{
    compare_models, time_fit_predict, write_predictions_csv, CompareOptions, ComparisonRow,
    ComparisonTable,
    TimingRecord,
};

/// Disjoint train/test row indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Seeded shuffle of `0..n`; the first `round(ratio * n)` indices train.
pub fn train_test_split(n: usize, ratio: f64, seed: u64) -> Result<SplitIndices> {
    if n < 2 {
        return Err(Error::EmptyInput("train/test split needs at least two rows"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    Ok(SplitIndices {
        train: idx,
        test,
        seed,
        ratio,
    })
}

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput("metric needs at least one value"));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / y.len() as f64).sqrt())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if y.len() < 2 || !(ss_tot > 0.0) {
        return Err(Error::ZeroVarianceTarget);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub r2: f64,
    pub n: usize,
}

impl MetricReport {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(MetricReport {
            rmse: rmse(y, yhat)?,
            r2: r2(y, yhat)?,
            n: y.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Y: [f64; 4] = [3.0, -0.5, 2.0, 7.0];
    const YHAT: [f64; 4] = [2.5, 0.0, 2.0, 8.0];

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&Y, &Y).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((rmse(&Y, &YHAT).unwrap() - 0.375f64.sqrt()).abs() < 1e-12);
        assert!(matches!(rmse(&[1.0], &[]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(rmse(&[], &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r2(&Y, &Y).unwrap(), 1.0);
        let m = Y.iter().sum::<f64>() / 4.0;
        assert!(r2(&Y, &[m; 4]).unwrap().abs() < 1e-15);
        assert!((r2(&Y, &YHAT).unwrap() - (1.0 - 1.5 / 29.1875)).abs() < 1e-12);
        assert!(matches!(r2(&[2.0; 3], &[1.0; 3]), Err(Error::ZeroVarianceTarget)));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = train_test_split(10, 0.8, 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        assert_eq!(s, train_test_split(10, 0.8, 7).unwrap());
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let s = train_test_split(2, 0.5, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
        assert!(train_test_split(1, 0.5, 1).is_err());
        assert!(train_test_split(10, 1.0, 1).is_err());
    }
}
