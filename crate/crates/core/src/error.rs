use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the pipeline can report.
///
/// Variant names double as the short diagnostic tags printed by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("MissingHeader: input has no header row")]
    MissingHeader,
    #[error("MissingTimestamp: no `timestamp` column in header")]
    MissingTimestamp,
    #[error("UnknownTarget: target column `{0}` not found")]
    UnknownTarget(String),
    #[error("MalformedRow: line {line} has {found} fields, expected {expected}")]
    MalformedRow {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("NonNumericCell: line {line}, column `{column}`: `{value}`")]
    NonNumericCell {
        line: usize,
        column: String,
        value: String,
    },
    #[error("BadTimestamp: line {line}: `{value}` (expected YYYY-MM-DD HH:MM:SS)")]
    BadTimestamp { line: usize, value: String },
    #[error("AllMissingColumn: column `{0}` has no observed values")]
    AllMissingColumn(String),
    #[error("UnknownColumn: `{0}`")]
    UnknownColumn(String),
    #[error("MissingColumn: required column `{0}` is absent")]
    MissingColumn(String),
    #[error("TargetDropped: column selection must keep target `{0}`")]
    TargetDropped(String),
    #[error("ConstantColumn: `{0}` has zero variance")]
    ConstantColumn(String),
    #[error("EmptyInput: {0}")]
    EmptyInput(&'static str),
    #[error("DegenerateBandwidth: all values identical and no bandwidth supplied")]
    DegenerateBandwidth,
    #[error("NonPositiveIrradiance: inclined irradiance {0} W/m2 is below the 1 W/m2 guard")]
    NonPositiveIrradiance(f64),
    #[error("DimensionMismatch: expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("LengthMismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("ZeroVarianceTarget: r2 is undefined for a constant target")]
    ZeroVarianceTarget,
    #[error("DegenerateDesign: normal equations are singular even with ridge fallback")]
    DegenerateDesign,
    #[error("KTooLarge: k = {k} exceeds the {n} training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("FoldTooSmall: {n} rows cannot fill {folds} folds")]
    FoldTooSmall { n: usize, folds: usize },
    #[error("NotConverged: no convergence after {0} iterations")]
    NotConverged(usize),
    #[error("InvalidHyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("UnsupportedFormat: {0}")]
    UnsupportedFormat(String),
    #[error("Io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("Csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("Json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("Config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidHyperparameter(msg.into())
    }

    /// Short tag naming the variant, e.g. `UnknownTarget`.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::MissingHeader => "MissingHeader",
            Error::MissingTimestamp => "MissingTimestamp",
            Error::UnknownTarget(_) => "UnknownTarget",
            Error::MalformedRow { .. } => "MalformedRow",
            Error::NonNumericCell { .. } => "NonNumericCell",
            Error::BadTimestamp { .. } => "BadTimestamp",
            Error::AllMissingColumn(_) => "AllMissingColumn",
            Error::UnknownColumn(_) => "UnknownColumn",
            Error::MissingColumn(_) => "MissingColumn",
            Error::TargetDropped(_) => "TargetDropped",
            Error::ConstantColumn(_) => "ConstantColumn",
            Error::EmptyInput(_) => "EmptyInput",
            Error::DegenerateBandwidth => "DegenerateBandwidth",
            Error::NonPositiveIrradiance(_) => "NonPositiveIrradiance",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ZeroVarianceTarget => "ZeroVarianceTarget",
            Error::DegenerateDesign => "DegenerateDesign",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::FoldTooSmall { .. } => "FoldTooSmall",
            Error::NotConverged(_) => "NotConverged",
            Error::InvalidHyperparameter(_) => "InvalidHyperparameter",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::Io { .. } => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
            Error::Config(_) => "Config",
        }
    }
}
