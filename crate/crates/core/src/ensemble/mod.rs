//! Ensemble regressors and classical baselines behind one fit/predict contract.
//!
//! A [`ModelSpec`] names a model kind, its hyperparameters and a seed;
//! [`ModelSpec::fit`] returns an immutable [`TrainedModel`] that predicts,
//! serializes to JSON and reloads with bitwise-identical predictions.

mod boost;
mod combine;
mod forest;
mod linear;
mod params;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{check_xy, SplitMode};

pub use boost::{BoostStage, BoostState};
pub use combine::{kfold_indices, nnls_solve, StackingState, VotingState};
pub use forest::{weighted_median, AdaBoostState, ForestState};
pub use linear::{KnnState, LinearState, FALLBACK_RIDGE};
pub use params::{
    AdaBoostParams, AdaLoss, BoostLoss, ElasticNetParams, ExtraTreesParams, ForestParams, GbmParams, GossParams,
    HistGbmParams, Hyperparams, KnnParams, LinearParams, RidgeParams, StackingParams, VotingParams,
    XgbParams,
};

/// Version written to and required from model files.
pub const FORMAT_VERSION: u32 = 1;

/// SplitMix64 mix of `(master, index)`; gives each tree or stage its own stream.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Ridge,
    ElasticNet,
    Knn,
    RandomForest,
    ExtraTrees,
    AdaboostR2,
    Gbm,
    Xgb,
    GossGbm,
    HistGbm,
    Voting,
    Stacking,
}

impl ModelKind {
    pub const ALL: [ModelKind; 13] = [
        ModelKind::Voting,
        ModelKind::Stacking,
        ModelKind::HistGbm,
        ModelKind::GossGbm,
        ModelKind::ExtraTrees,
        ModelKind::RandomForest,
        ModelKind::Xgb,
        ModelKind::Gbm,
        ModelKind::AdaboostR2,
        ModelKind::Linear,
        ModelKind::Ridge,
        ModelKind::ElasticNet,
        ModelKind::Knn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Ridge => "ridge",
            ModelKind::ElasticNet => "elastic_net",
            ModelKind::Knn => "knn",
            ModelKind::RandomForest => "random_forest",
            ModelKind::ExtraTrees => "extra_trees",
            ModelKind::AdaboostR2 => "adaboost_r2",
            ModelKind::Gbm => "gbm",
            ModelKind::Xgb => "xgb",
            ModelKind::GossGbm => "goss_gbm",
            ModelKind::HistGbm => "hist_gbm",
            ModelKind::Voting => "voting",
            ModelKind::Stacking => "stacking",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model kind '{s}'")))
    }

    pub fn is_ensemble(&self) -> bool {
        !matches!(
            self,
            ModelKind::Linear | ModelKind::Ridge | ModelKind::ElasticNet | ModelKind::Knn
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Members of the default voting and stacking ensembles.
pub const DEFAULT_COMBINER_MEMBERS: [ModelKind; 4] = [
    ModelKind::HistGbm,
    ModelKind::GossGbm,
    ModelKind::ExtraTrees,
    ModelKind::RandomForest,
];

impl Hyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparams::Linear(_) => ModelKind::Linear,
            Hyperparams::Ridge(_) => ModelKind::Ridge,
            Hyperparams::ElasticNet(_) => ModelKind::ElasticNet,
            Hyperparams::Knn(_) => ModelKind::Knn,
            Hyperparams::RandomForest(_) => ModelKind::RandomForest,
            Hyperparams::ExtraTrees(_) => ModelKind::ExtraTrees,
            Hyperparams::AdaboostR2(_) => ModelKind::AdaboostR2,
            Hyperparams::Gbm(_) => ModelKind::Gbm,
            Hyperparams::Xgb(_) => ModelKind::Xgb,
            Hyperparams::GossGbm(_) => ModelKind::GossGbm,
            Hyperparams::HistGbm(_) => ModelKind::HistGbm,
            Hyperparams::Voting(_) => ModelKind::Voting,
            Hyperparams::Stacking(_) => ModelKind::Stacking,
        }
    }

    /// Default hyperparameters for `kind`; combiners get the default members.
    pub fn default_for(kind: ModelKind, seed: u64) -> Self {
        let members = || {
            DEFAULT_COMBINER_MEMBERS
                .iter()
                .map(|&k| ModelSpec::new_unchecked(Hyperparams::default_for(k, seed), seed))
                .collect()
        };
        match kind {
            ModelKind::Linear => Hyperparams::Linear(LinearParams::default()),
            ModelKind::Ridge => Hyperparams::Ridge(RidgeParams::default()),
            ModelKind::ElasticNet => Hyperparams::ElasticNet(ElasticNetParams::default()),
            ModelKind::Knn => Hyperparams::Knn(KnnParams::default()),
            ModelKind::RandomForest => Hyperparams::RandomForest(ForestParams::default()),
            ModelKind::ExtraTrees => Hyperparams::ExtraTrees(ExtraTreesParams::default()),
            ModelKind::AdaboostR2 => Hyperparams::AdaboostR2(AdaBoostParams::default()),
            ModelKind::Gbm => Hyperparams::Gbm(GbmParams::default()),
            ModelKind::Xgb => Hyperparams::Xgb(XgbParams::default()),
            ModelKind::GossGbm => Hyperparams::GossGbm(GossParams::default()),
            ModelKind::HistGbm => Hyperparams::HistGbm(HistGbmParams::default()),
            ModelKind::Voting => Hyperparams::Voting(VotingParams {
                bases: members(),
                weights: None,
                vote_classes: None,
            }),
            ModelKind::Stacking => Hyperparams::Stacking(StackingParams {
                bases: members(),
                n_folds: 5,
            }),
        }
    }
}

/// A model kind with validated hyperparameters and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub params: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(params: Hyperparams, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(ModelSpec { params, seed })
    }

    fn new_unchecked(params: Hyperparams, seed: u64) -> Self {
        ModelSpec { params, seed }
    }

    pub fn default_for(kind: ModelKind, seed: u64) -> Self {
        ModelSpec::new_unchecked(Hyperparams::default_for(kind, seed), seed)
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    pub fn fit(&self, x: &DMatrix<f64>, y: &[f64], feature_names: &[String]) -> Result<TrainedModel> {
        fit_model(self, x, y, feature_names).map(|(m, _)| m)
    }

    /// Fit that also returns the per-stage training loss of boosting models
    /// (initial constant first); `None` for other kinds.
    pub fn fit_traced(
        &self,
        x: &DMatrix<f64>,
        y: &[f64],
        feature_names: &[String],
    ) -> Result<(TrainedModel, Option<Vec<f64>>)> {
        fit_model(self, x, y, feature_names)
    }
}

/// Full roster: the nine ensembles followed by the four classical baselines.
pub fn default_roster(seed: u64) -> Vec<ModelSpec> {
    ModelKind::ALL
        .iter()
        .map(|&k| ModelSpec::default_for(k, seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedState {
    Linear(LinearState),
    Knn(KnnState),
    Forest(ForestState),
    AdaBoost(AdaBoostState),
    Boost(BoostState),
    Voting(VotingState),
    Stacking(StackingState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub state: FittedState,
}

pub(crate) fn fit_model(
    spec: &ModelSpec,
    x: &DMatrix<f64>,
    y: &[f64],
    names: &[String],
) -> Result<(TrainedModel, Option<Vec<f64>>)> {
    check_xy(x, y)?;
    if names.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: names.len(),
        });
    }
    spec.params.validate()?;
    let seed = spec.seed;
    let mut history = None;
    let state = match &spec.params {
        Hyperparams::Linear(_) => FittedState::Linear(linear::fit_ridge(x, y, 0.0)?),
        Hyperparams::Ridge(p) => FittedState::Linear(linear::fit_ridge(x, y, p.lambda)?),
        Hyperparams::ElasticNet(p) => FittedState::Linear(linear::fit_elastic_net(x, y, p)?),
        Hyperparams::Knn(p) => FittedState::Knn(linear::fit_knn(x, y, p)?),
        Hyperparams::RandomForest(p) => {
            FittedState::Forest(forest::fit_forest(x, y, p, SplitMode::Exact, seed)?)
        }
        Hyperparams::ExtraTrees(p) => {
            FittedState::Forest(forest::fit_forest(x, y, &p.as_forest(), SplitMode::RandomCut, seed)?)
        }
        Hyperparams::AdaboostR2(p) => FittedState::AdaBoost(forest::fit_adaboost(x, y, p, seed)?.0),
        Hyperparams::Gbm(p) => {
            let (s, h) = boost::fit_gbm(x, y, p, seed)?;
            history = Some(h);
            FittedState::Boost(s)
        }
        Hyperparams::Xgb(p) => {
            let (s, h) = boost::fit_xgb(x, y, p, seed)?;
            history = Some(h);
            FittedState::Boost(s)
        }
        Hyperparams::GossGbm(p) => {
            let (s, h) = boost::fit_goss(x, y, p, seed)?;
            history = Some(h);
            FittedState::Boost(s)
        }
        Hyperparams::HistGbm(p) => {
            let (s, h) = boost::fit_hist_gbm(x, y, p, seed)?;
            history = Some(h);
            FittedState::Boost(s)
        }
        Hyperparams::Voting(p) => FittedState::Voting(combine::fit_voting(
            &p.bases,
            p.weights.as_deref(),
            p.vote_classes,
            x,
            y,
            names,
        )?),
        Hyperparams::Stacking(p) => FittedState::Stacking(combine::fit_stacking(
            &p.bases, p.n_folds, x, y, names, seed,
        )?),
    };
    Ok((
        TrainedModel {
            spec: spec.clone(),
            feature_names: names.to_vec(),
            state,
        },
        history,
    ))
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format_version: u32,
    #[serde(flatten)]
    params: &'a Hyperparams,
    seed: u64,
    feature_names: &'a [String],
    state: &'a FittedState,
}

#[derive(Deserialize)]
struct ModelFileIn {
    format_version: u32,
    #[serde(flatten)]
    params: Hyperparams,
    seed: u64,
    feature_names: Vec<String>,
    state: FittedState,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u32>,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                found: x.ncols(),
            });
        }
        let n = x.nrows();
        Ok(match &self.state {
            FittedState::Linear(s) => (0..n).map(|i| s.predict_at(x, i)).collect(),
            FittedState::Knn(s) => (0..n)
                .into_par_iter()
                .map_init(Vec::new, |buf, i| s.predict_at(x, i, buf))
                .collect(),
            FittedState::Forest(s) => (0..n).into_par_iter().map(|i| s.predict_at(x, i)).collect(),
            FittedState::AdaBoost(s) => {
                let mut buf = Vec::new();
                (0..n).map(|i| s.predict_at(x, i, &mut buf)).collect()
            }
            FittedState::Boost(s) => (0..n).map(|i| s.predict_at(x, i)).collect(),
            FittedState::Voting(s) => {
                let outs = self.base_outputs(&s.bases, x)?;
                (0..n)
                    .map(|i| s.combine(&outs.iter().map(|o| o[i]).collect::<Vec<_>>()))
                    .collect()
            }
            FittedState::Stacking(s) => {
                let outs = self.base_outputs(&s.bases, x)?;
                (0..n)
                    .map(|i| outs.iter().zip(&s.weights).map(|(o, w)| w * o[i]).sum())
                    .collect()
            }
        })
    }

    fn base_outputs(&self, bases: &[TrainedModel], x: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
        bases.iter().map(|b| b.predict(x)).collect()
    }

    /// Combiner weights of voting or stacking models.
    pub fn combiner_weights(&self) -> Option<&[f64]> {
        match &self.state {
            FittedState::Voting(s) => Some(&s.weights),
            FittedState::Stacking(s) => Some(&s.weights),
            _ => None,
        }
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        let out = ModelFileOut {
            format_version: FORMAT_VERSION,
            params: &self.spec.params,
            seed: self.spec.seed,
            feature_names: &self.feature_names,
            state: &self.state,
        };
        serde_json::to_writer(w, &out)?;
        Ok(())
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(r)?;
        let probe: VersionProbe = serde_json::from_value(value.clone())?;
        if probe.format_version != Some(FORMAT_VERSION) {
            return Err(Error::UnsupportedFormat(format!(
                "model format_version {:?}, expected {FORMAT_VERSION}",
                probe.format_version
            )));
        }
        let m: ModelFileIn = serde_json::from_value(value)?;
        debug_assert_eq!(m.format_version, FORMAT_VERSION);
        Ok(TrainedModel {
            spec: ModelSpec {
                params: m.params,
                seed: m.seed,
            },
            feature_names: m.feature_names,
            state: m.state,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.to_writer(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(f))
    }
}
