use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::ensemble::{ModelSpec, TrainedModel};
use crate::error::{Error, Result};

use super::{r2, rmse, train_test_split, SplitIndices};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingRecord {
    pub fit_seconds: f64,
    pub per_prediction_microseconds: f64,
    pub single_thread: bool,
}

fn run_maybe_serial<T: Send>(single_thread: bool, f: impl FnOnce() -> T + Send) -> Result<T> {
    if single_thread {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    } else {
        Ok(f())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Fits `repetitions` times and predicts the test rows once with the last fit.
///
/// Reports the median fit wall time and the mean per-row prediction latency.
pub fn time_fit_predict(
    spec: &ModelSpec,
    x_train: &DMatrix<f64>,
    y_train: &[f64],
    x_test: &DMatrix<f64>,
    feature_names: &[String],
    repetitions: usize,
    single_thread: bool,
) -> Result<(TrainedModel, Vec<f64>, TimingRecord)> {
    if repetitions < 1 {
        return Err(Error::invalid("repetitions must be >= 1"));
    }
    run_maybe_serial(single_thread, || {
        let mut times = Vec::with_capacity(repetitions);
        let mut model = None;
        for _ in 0..repetitions {
            let start = Instant::now();
            let m = spec.fit(x_train, y_train, feature_names)?;
            times.push(start.elapsed().as_secs_f64());
            model = Some(m);
        }
        let model = model.expect("at least one repetition");
        let start = Instant::now();
        let pred = model.predict(x_test)?;
        let elapsed = start.elapsed().as_secs_f64();
        let timing = TimingRecord {
            fit_seconds: median(times),
            per_prediction_microseconds: elapsed * 1e6 / x_test.nrows().max(1) as f64,
            single_thread,
        };
        Ok((model, pred, timing))
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    /// Mean over repeats; NaN when the model failed.
    pub rmse: f64,
    pub r2: f64,
    pub fit_seconds: f64,
    pub us_per_prediction: f64,
    pub error: Option<String>,
    /// Test-set predictions of the first repeat.
    #[serde(skip)]
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Row indices and targets of the first repeat's test set.
    pub test_indices: Vec<usize>,
    pub actual: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Repeat `r` re-splits with seed `split.seed + r` and refits with `spec.seed + r`.
    pub repeats: usize,
    pub single_thread: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            repeats: 1,
            single_thread: false,
        }
    }
}

fn reseeded(spec: &ModelSpec, offset: u64) -> ModelSpec {
    let mut s = spec.clone();
    s.seed = spec.seed.wrapping_add(offset);
    s
}

/// Fits every spec on the training rows, scores the test rows and ranks by RMSE.
///
/// A failing model yields a row with its error and NaN metrics; the table is
/// still produced. Ties in RMSE are ordered by model name.
pub fn compare_models(
    specs: &[ModelSpec],
    data: &Dataset,
    features: &[String],
    split: &SplitIndices,
    opts: CompareOptions,
) -> Result<ComparisonTable> {
    if specs.is_empty() {
        return Err(Error::EmptyInput("no models to compare"));
    }
    if opts.repeats < 1 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    let x = data.feature_matrix(features)?;
    let y = data.target();
    let take = |rows: &[usize]| {
        (
            DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)]),
            rows.iter().map(|&r| y[r]).collect::<Vec<f64>>(),
        )
    };
    let splits = (0..opts.repeats as u64)
        .map(|r| {
            if r == 0 {
                Ok(split.clone())
            } else {
                train_test_split(y.len(), split.ratio, split.seed.wrapping_add(r))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let name = spec.kind().name().to_string();
        let mut scores = Vec::new();
        let mut fit_times = Vec::new();
        let mut predict_us = Vec::new();
        let mut first_pred = Vec::new();
        let mut failure = None;
        for (r, s) in splits.iter().enumerate() {
            let (xtr, ytr) = take(&s.train);
            let (xte, yte) = take(&s.test);
            let outcome = time_fit_predict(
                &reseeded(spec, r as u64),
                &xtr,
                &ytr,
                &xte,
                features,
                1,
                opts.single_thread,
            )
            .and_then(|(_, pred, timing)| Ok((rmse(&yte, &pred)?, r2(&yte, &pred)?, pred, timing)));
            match outcome {
                Ok((e, q, pred, timing)) => {
                    scores.push((e, q));
                    fit_times.push(timing.fit_seconds);
                    predict_us.push(timing.per_prediction_microseconds);
                    if r == 0 {
                        first_pred = pred;
                    }
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        let k = scores.len() as f64;
        rows.push(match failure {
            Some(err) => ComparisonRow {
                model: name,
                rmse: f64::NAN,
                r2: f64::NAN,
                fit_seconds: f64::NAN,
                us_per_prediction: f64::NAN,
                error: Some(err),
                predictions: Vec::new(),
            },
            None => ComparisonRow {
                model: name,
                rmse: scores.iter().map(|s| s.0).sum::<f64>() / k,
                r2: scores.iter().map(|s| s.1).sum::<f64>() / k,
                fit_seconds: median(fit_times),
                us_per_prediction: predict_us.iter().sum::<f64>() / k,
                error: None,
                predictions: first_pred,
            },
        });
    }
    rows.sort_by(|a, b| {
        a.error
            .is_some()
            .cmp(&b.error.is_some())
            .then(a.rmse.total_cmp(&b.rmse))
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(ComparisonTable {
        rows,
        test_indices: split.test.clone(),
        actual: split.test.iter().map(|&r| y[r]).collect(),
    })
}

impl ComparisonTable {
    /// `model,rmse,r2,fit_seconds,us_per_prediction`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["model", "rmse", "r2", "fit_seconds", "us_per_prediction"])?;
        for r in &self.rows {
            out.write_record([
                r.model.clone(),
                r.rmse.to_string(),
                r.r2.to_string(),
                r.fit_seconds.to_string(),
                r.us_per_prediction.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<comparison csv>", e))
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<4} {:<14} {:>12} {:>8} {:>12} {:>14}\n",
            "rank", "model", "rmse", "r2", "fit_s", "us/pred"
        );
        for (i, r) in self.rows.iter().enumerate() {
            match &r.error {
                None => s.push_str(&format!(
                    "{:<4} {:<14} {:>12.3} {:>8.4} {:>12.3} {:>14.2}\n",
                    i + 1,
                    r.model,
                    r.rmse,
                    r.r2,
                    r.fit_seconds,
                    r.us_per_prediction
                )),
                Some(e) => s.push_str(&format!("{:<4} {:<14} failed: {e}\n", i + 1, r.model)),
            }
        }
        s
    }

    pub fn row(&self, model: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model == model)
    }
}

/// `observation_index,actual,predicted`
pub fn write_predictions_csv<W: Write>(
    w: W,
    indices: &[usize],
    actual: &[f64],
    predicted: &[f64],
) -> Result<()> {
    if indices.len() != actual.len() || actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["observation_index", "actual", "predicted"])?;
    for ((i, a), p) in indices.iter().zip(actual).zip(predicted) {
        out.write_record([i.to_string(), a.to_string(), p.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<predictions csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{Hyperparams, KnnParams, ModelKind};

    fn frame() -> (Dataset, Vec<String>) {
        let n = 60;
        let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = a.iter().map(|v| 3.0 * v + 1.0 + (v * 1.7).sin()).collect();
        let t0 = crate::dataset::parse_timestamp("2019-01-01 00:00:00").unwrap();
        let ts = (0..n).map(|i| t0 + chrono::Duration::minutes(i as i64)).collect();
        let d = Dataset::new(vec!["a".into(), "Power".into()], vec![a, y], "Power", ts).unwrap();
        (d, vec!["a".into()])
    }

    #[test]
    fn rows_are_sorted_and_match_direct_metrics() {
        let (d, f) = frame();
        let split = train_test_split(d.n_rows(), 0.8, 3).unwrap();
        let specs = vec![
            ModelSpec::new(Hyperparams::Knn(KnnParams { k: 48 }), 0).unwrap(),
            ModelSpec::default_for(ModelKind::Linear, 0),
        ];
        let t = compare_models(&specs, &d, &f, &split, CompareOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].model, "linear");
        assert!(t.rows[0].rmse <= t.rows[1].rmse);
        assert!(t.rows[1].error.is_none());
        let direct = rmse(&t.actual, &t.rows[0].predictions).unwrap();
        assert_eq!(direct, t.rows[0].rmse);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("model,rmse,r2,fit_seconds,us_per_prediction\n"));
        assert!(t.to_text().contains("linear"));
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let (d, f) = frame();
        let split = train_test_split(d.n_rows(), 0.8, 3).unwrap();
        let specs = vec![
            ModelSpec::new(Hyperparams::Knn(KnnParams { k: 1000 }), 0).unwrap(),
            ModelSpec::default_for(ModelKind::Ridge, 0),
        ];
        let t = compare_models(&specs, &d, &f, &split, CompareOptions::default()).unwrap();
        assert_eq!(t.rows[0].model, "ridge");
        assert!(t.rows[1].error.as_deref().unwrap().contains("KTooLarge"));
    }

    #[test]
    fn timing_fields_are_finite() {
        let (d, f) = frame();
        let x = d.feature_matrix(&f).unwrap();
        let spec = ModelSpec::default_for(ModelKind::Linear, 0);
        let (_, pred, t) = time_fit_predict(&spec, &x, d.target(), &x, &f, 3, true).unwrap();
        assert_eq!(pred.len(), d.n_rows());
        assert!(t.fit_seconds >= 0.0 && t.per_prediction_microseconds >= 0.0);
        assert!(t.single_thread);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
    }
}
