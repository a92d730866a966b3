//! Solar PV power forecasting test-bed.
//!
//! Data cleaning, feature analysis, a physical PV plant model, CART-based
//! ensemble regressors, evaluation utilities and a synthetic data generator.

pub mod config;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod physical;
pub mod synth;
pub mod tree;

pub use config::RunConfig;
pub use dataset::{CleaningReport, ColumnSummary, Dataset};
pub use ensemble::{default_roster, ModelKind, ModelSpec, TrainedModel};
pub use error::{Error, Result};
pub use eval::{
    compare_models, r2, rmse, train_test_split, CompareOptions, ComparisonTable, MetricReport, SplitIndices,
};
pub use physical::{calculated_power, LogBase, PvPlantParams};
pub use synth::{generate_dataset, SynthConfig};
pub use tree::{fit_cart, RegressionTree, TreeHyperparams};
