//! Observation table loading, validation and cleaning.
//!
//! A [`Dataset`] is an immutable, column-major table of real values with a
//! timestamp per row and one designated target column. Every cleaning step
//! returns a new dataset together with a [`CleaningReport`].
//!
//! CSV layout: comma-delimited, header row first, a `timestamp` column holding
//! `YYYY-MM-DD HH:MM:SS`, and numeric cells in decimal or scientific notation.
//! An empty field or the literal `NA` marks a missing cell.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
pub const TIMESTAMP_COLUMN: &str = "timestamp";

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).ok()
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

pub(crate) fn serialize_timestamp<S: serde::Serializer>(t: &NaiveDateTime, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_timestamp(t))
}

/// One logged row: a timestamp, named readings and the measured power.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub timestamp: NaiveDateTime,
    pub features: BTreeMap<String, Option<f64>>,
    pub power: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    column_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    missing: Vec<Vec<bool>>,
    target_name: String,
    timestamps: Vec<NaiveDateTime>,
}

impl PartialEq for Dataset {
    /// Cell-for-cell equality: masks must agree and observed values must be
    /// bitwise identical. Values under a missing mask are ignored.
    fn eq(&self, other: &Self) -> bool {
        if self.column_names != other.column_names
            || self.target_name != other.target_name
            || self.timestamps != other.timestamps
            || self.missing != other.missing
        {
            return false;
        }
        self.columns
            .iter()
            .zip(&other.columns)
            .zip(&self.missing)
            .all(|((a, b), m)| {
                a.iter()
                    .zip(b)
                    .zip(m)
                    .all(|((x, y), &miss)| miss || x.to_bits() == y.to_bits())
            })
    }
}

impl Dataset {
    /// Builds a fully observed dataset.
    pub fn new(
        column_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        target_name: impl Into<String>,
        timestamps: Vec<NaiveDateTime>,
    ) -> Result<Self> {
        let missing = columns.iter().map(|c| vec![false; c.len()]).collect();
        Self::with_missing(column_names, columns, missing, target_name, timestamps)
    }

    /// Builds a dataset with an explicit missing mask. Missing cells are stored as NaN.
    pub fn with_missing(
        column_names: Vec<String>,
        mut columns: Vec<Vec<f64>>,
        missing: Vec<Vec<bool>>,
        target_name: impl Into<String>,
        timestamps: Vec<NaiveDateTime>,
    ) -> Result<Self> {
        let target_name = target_name.into();
        if column_names.len() != columns.len() || missing.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: column_names.len(),
                right: columns.len(),
            });
        }
        let n = timestamps.len();
        if n == 0 {
            return Err(Error::EmptyInput("dataset has no rows"));
        }
        for (c, m) in columns.iter().zip(&missing) {
            if c.len() != n || m.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: c.len().min(m.len()),
                });
            }
        }
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(Error::Config(format!("duplicate column `{name}`")));
            }
        }
        if !column_names.contains(&target_name) {
            return Err(Error::UnknownTarget(target_name));
        }
        for (c, m) in columns.iter_mut().zip(&missing) {
            for (v, &miss) in c.iter_mut().zip(m) {
                if miss {
                    *v = f64::NAN;
                }
            }
        }
        Ok(Dataset {
            column_names,
            columns,
            missing,
            target_name,
            timestamps,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Raw column values; missing cells read as NaN.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn missing_mask(&self, name: &str) -> Option<&[bool]> {
        self.column_index(name).map(|i| self.missing[i].as_slice())
    }

    pub fn is_missing(&self, row: usize, column: usize) -> bool {
        self.missing[column][row]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|m| m.iter().any(|&x| x))
    }

    pub fn target(&self) -> &[f64] {
        self.column(&self.target_name).expect("target is a member")
    }

    /// All column names except the target, in table order.
    pub fn feature_names(&self) -> Vec<String> {
        self.column_names
            .iter()
            .filter(|c| **c != self.target_name)
            .cloned()
            .collect()
    }

    pub fn record(&self, row: usize) -> ObservationRecord {
        let value = |c: usize| (!self.missing[c][row]).then(|| self.columns[c][row]);
        let features = self
            .column_names
            .iter()
            .enumerate()
            .filter(|(_, n)| **n != self.target_name)
            .map(|(c, n)| (n.clone(), value(c)))
            .collect();
        let power = value(self.column_index(&self.target_name).unwrap());
        ObservationRecord {
            timestamp: self.timestamps[row],
            features,
            power,
        }
    }

    /// Row-major copy of the named columns as an `n x names.len()` matrix.
    pub fn feature_matrix(&self, names: &[String]) -> Result<DMatrix<f64>> {
        let cols = names
            .iter()
            .map(|n| self.column(n).ok_or_else(|| Error::UnknownColumn(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(self.n_rows(), cols.len(), |i, j| cols[j][i]))
    }

    /// Subset of rows, in the order given. Indices may repeat.
    pub fn take_rows(&self, rows: &[usize]) -> Result<Self> {
        let pick = |c: &Vec<f64>| rows.iter().map(|&r| c[r]).collect();
        let pick_mask = |m: &Vec<bool>| rows.iter().map(|&r| m[r]).collect();
        Dataset::with_missing(
            self.column_names.clone(),
            self.columns.iter().map(pick).collect(),
            self.missing.iter().map(pick_mask).collect(),
            self.target_name.clone(),
            rows.iter().map(|&r| self.timestamps[r]).collect(),
        )
    }

    /// Replaces the named column, or appends it when absent.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self> {
        let mut out = self.clone();
        if values.len() != self.n_rows() {
            return Err(Error::LengthMismatch {
                left: self.n_rows(),
                right: values.len(),
            });
        }
        let mask = vec![false; values.len()];
        match self.column_index(name) {
            Some(i) => {
                out.columns[i] = values;
                out.missing[i] = mask;
            }
            None => {
                out.column_names.push(name.to_string());
                out.columns.push(values);
                out.missing.push(mask);
            }
        }
        Ok(out)
    }

    pub fn with_target(&self, target: &str) -> Result<Self> {
        if self.column_index(target).is_none() {
            return Err(Error::UnknownTarget(target.to_string()));
        }
        let mut out = self.clone();
        out.target_name = target.to_string();
        Ok(out)
    }

    // ---- CSV ---------------------------------------------------------------

    pub fn load_csv(path: impl AsRef<Path>, target_name: &str) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, target_name)
    }

    pub fn read_csv<R: Read>(reader: R, target_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(Error::MissingHeader),
        };
        let header: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(Error::MissingHeader);
        }
        let ts_col = header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(TIMESTAMP_COLUMN))
            .ok_or(Error::MissingTimestamp)?;
        if !header.iter().any(|h| h == target_name) {
            return Err(Error::UnknownTarget(target_name.to_string()));
        }
        let names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != ts_col)
            .map(|(_, h)| h.clone())
            .collect();
        let mut columns = vec![Vec::new(); names.len()];
        let mut missing = vec![Vec::new(); names.len()];
        let mut timestamps = Vec::new();
        for (k, rec) in records.enumerate() {
            let line = k + 2;
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::MalformedRow {
                    line,
                    found: rec.len(),
                    expected: header.len(),
                });
            }
            let mut c = 0;
            for (i, field) in rec.iter().enumerate() {
                let field = field.trim();
                if i == ts_col {
                    let ts = parse_timestamp(field).ok_or_else(|| Error::BadTimestamp {
                        line,
                        value: field.to_string(),
                    })?;
                    timestamps.push(ts);
                    continue;
                }
                if field.is_empty() || field == "NA" {
                    columns[c].push(f64::NAN);
                    missing[c].push(true);
                } else {
                    let v: f64 = field.parse().map_err(|_| Error::NonNumericCell {
                        line,
                        column: names[c].clone(),
                        value: field.to_string(),
                    })?;
                    columns[c].push(v);
                    missing[c].push(false);
                }
                c += 1;
            }
        }
        if timestamps.is_empty() {
            return Err(Error::EmptyInput("CSV has a header but no data rows"));
        }
        Dataset::with_missing(names, columns, missing, target_name, timestamps)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    /// Writes `timestamp` first, then the columns in dataset order. `f64`'s
    /// `Display` is the shortest representation that parses back exactly.
    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![TIMESTAMP_COLUMN.to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for r in 0..self.n_rows() {
            row.clear();
            row.push(format_timestamp(&self.timestamps[r]));
            for c in 0..self.n_cols() {
                if self.missing[c][r] {
                    row.push(String::new());
                } else {
                    row.push(self.columns[c][r].to_string());
                }
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    // ---- cleaning ------------------------------------------------------------

    /// Replaces every missing cell with the mean of its column's observed values.
    pub fn impute_missing_mean(&self) -> Result<(Dataset, CleaningReport)> {
        let mut report = CleaningReport::identity(self);
        let mut out = self.clone();
        for (c, name) in self.column_names.iter().enumerate() {
            let mask = &self.missing[c];
            let n_missing = mask.iter().filter(|&&m| m).count();
            report.imputed_cells.insert(name.clone(), n_missing);
            if n_missing == 0 {
                continue;
            }
            let observed: Vec<f64> = self.columns[c]
                .iter()
                .zip(mask)
                .filter(|(_, &m)| !m)
                .map(|(&v, _)| v)
                .collect();
            if observed.is_empty() {
                return Err(Error::AllMissingColumn(name.clone()));
            }
            let mean = observed.iter().sum::<f64>() / observed.len() as f64;
            for (v, m) in out.columns[c].iter_mut().zip(out.missing[c].iter_mut()) {
                if *m {
                    *v = mean;
                    *m = false;
                }
            }
        }
        Ok((out, report))
    }

    /// Drops rows whose target is strictly below `threshold`.
    ///
    /// Missing targets never compare below the threshold; impute first.
    pub fn filter_low_power_rows(&self, threshold: f64) -> (Dataset, CleaningReport) {
        let target = self.target();
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&r| !(target[r] < threshold))
            .collect();
        let mut report = CleaningReport::identity(self);
        report.rows_out = keep.len();
        let out = if keep.is_empty() {
            // An empty table cannot be a Dataset; hand back a zero-row view.
            let mut d = self.clone();
            d.columns.iter_mut().for_each(Vec::clear);
            d.missing.iter_mut().for_each(Vec::clear);
            d.timestamps.clear();
            d
        } else {
            self.take_rows(&keep).expect("row subset of a valid dataset")
        };
        (out, report)
    }

    /// Projects onto `keep`, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, keep: &[S]) -> Result<(Dataset, CleaningReport)> {
        let keep: Vec<&str> = keep.iter().map(AsRef::as_ref).collect();
        for k in &keep {
            if self.column_index(k).is_none() {
                return Err(Error::UnknownColumn(k.to_string()));
            }
        }
        if !keep.contains(&self.target_name.as_str()) {
            return Err(Error::TargetDropped(self.target_name.clone()));
        }
        let mut report = CleaningReport::identity(self);
        for name in &self.column_names {
            if !keep.contains(&name.as_str()) {
                report.dropped_columns.push(DroppedColumn {
                    name: name.clone(),
                    reason: DropReason::classify_unselected(name),
                });
            }
        }
        let idx: Vec<usize> = keep.iter().map(|k| self.column_index(k).unwrap()).collect();
        let out = Dataset {
            column_names: keep.iter().map(|s| s.to_string()).collect(),
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            missing: idx.iter().map(|&i| self.missing[i].clone()).collect(),
            target_name: self.target_name.clone(),
            timestamps: self.timestamps.clone(),
        };
        report.cols_out = out.n_cols();
        Ok((out, report))
    }

    /// Per-column statistics over observed cells, population variance.
    pub fn summary_stats(&self) -> Vec<ColumnSummary> {
        self.column_names
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let observed: Vec<f64> = self.columns[c]
                    .iter()
                    .zip(&self.missing[c])
                    .filter(|(_, &m)| !m)
                    .map(|(&v, _)| v)
                    .collect();
                let n = observed.len();
                let (mean, variance, min, max) = if n == 0 {
                    (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                } else {
                    let mean = observed.iter().sum::<f64>() / n as f64;
                    let var =
                        observed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                    let min = observed.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (mean, var, min, max)
                };
                ColumnSummary {
                    name: name.clone(),
                    mean,
                    variance,
                    min,
                    max,
                    n_missing: self.columns[c].len() - n,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub n_missing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NonAverageReading,
    SensorStatus,
    LowImportance,
    HighCorrelation,
}

impl DropReason {
    fn classify_unselected(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if lower.contains("status") || lower.contains("flag") {
            DropReason::SensorStatus
        } else {
            DropReason::NonAverageReading
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub name: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub cols_in: usize,
    pub cols_out: usize,
    pub imputed_cells: BTreeMap<String, usize>,
    pub dropped_columns: Vec<DroppedColumn>,
}

impl CleaningReport {
    fn identity(d: &Dataset) -> Self {
        CleaningReport {
            rows_in: d.n_rows(),
            rows_out: d.n_rows(),
            cols_in: d.n_cols(),
            cols_out: d.n_cols(),
            imputed_cells: BTreeMap::new(),
            dropped_columns: Vec::new(),
        }
    }

    /// Folds a later stage into this one: inputs from `self`, outputs from `next`.
    pub fn then(mut self, next: CleaningReport) -> Self {
        self.rows_out = next.rows_out;
        self.cols_out = next.cols_out;
        for (k, v) in next.imputed_cells {
            *self.imputed_cells.entry(k).or_default() += v;
        }
        self.dropped_columns.extend(next.dropped_columns);
        self
    }
}

/// Fixed cleaning order: average-reading projection, mean imputation, then the
/// low-power row filter.
pub fn clean_pipeline<S: AsRef<str>>(
    d: &Dataset,
    keep: &[S],
    power_threshold: f64,
) -> Result<(Dataset, CleaningReport)> {
    let (selected, r1) = d.select_columns(keep)?;
    let (imputed, r2) = selected.impute_missing_mean()?;
    let (filtered, r3) = imputed.filter_low_power_rows(power_threshold);
    let mut report = r1.then(r2).then(r3);
    report.cols_in = d.n_cols();
    report.rows_in = d.n_rows();
    Ok((filtered, report))
}

/// Default projection: every `*_Avg` column plus the target.
pub fn average_reading_columns(d: &Dataset) -> Vec<String> {
    d.column_names()
        .iter()
        .filter(|c| c.ends_with("_Avg") || *c == d.target_name())
        .cloned()
        .collect()
}
