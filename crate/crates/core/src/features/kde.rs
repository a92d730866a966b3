use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Gaussian kernel density over a fixed sample.
#[derive(Debug, Clone)]
pub struct Kde {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    pub fn new(values: &[f64], bandwidth: Option<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("kde needs at least one value"));
        }
        let bandwidth = match bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(Error::invalid(format!("kde bandwidth must be > 0, got {h}"))),
            None => silverman_bandwidth(values)?,
        };
        Ok(Kde {
            samples: values.to_vec(),
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / ((2.0 * PI).sqrt() * h * self.samples.len() as f64);
        self.samples
            .iter()
            .map(|s| {
                let u = (x - s) / h;
                (-0.5 * u * u).exp()
            })
            .sum::<f64>()
            * norm
    }

    /// Densities on `size` evenly spaced points spanning `[lo, hi]`.
    pub fn evaluate_grid(&self, lo: f64, hi: f64, size: usize) -> Vec<(f64, f64)> {
        let step = if size > 1 { (hi - lo) / (size - 1) as f64 } else { 0.0 };
        (0..size)
            .map(|i| {
                let x = lo + step * i as f64;
                (x, self.density(x))
            })
            .collect()
    }

    pub fn support(&self) -> (f64, f64) {
        let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeEstimate {
    pub sample_n: usize,
    pub bandwidth: f64,
    pub grid: Vec<(f64, f64)>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `0.9 min(sigma, IQR / 1.34) n^(-1/5)`, falling back to whichever spread
/// is positive when the other is zero.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyInput("kde needs at least one value"));
    }
    if n < 2 {
        return Err(Error::DegenerateBandwidth);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return Err(Error::DegenerateBandwidth),
    };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Density on a uniform grid over `[min - 3h, max + 3h]`.
pub fn kde_estimate(values: &[f64], bandwidth: Option<f64>, grid_size: usize) -> Result<KdeEstimate> {
    if grid_size < 2 {
        return Err(Error::invalid("kde grid needs at least two points"));
    }
    let kde = Kde::new(values, bandwidth)?;
    let h = kde.bandwidth();
    let (lo, hi) = kde.support();
    Ok(KdeEstimate {
        sample_n: values.len(),
        bandwidth: h,
        grid: kde.evaluate_grid(lo - 3.0 * h, hi + 3.0 * h, grid_size),
    })
}
