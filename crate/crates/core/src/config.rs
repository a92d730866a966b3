//! Run configuration loaded from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{
    AdaBoostParams, ElasticNetParams, ExtraTreesParams, ForestParams, GbmParams, GossParams,
    HistGbmParams, Hyperparams, KnnParams, LinearParams, ModelKind, ModelSpec, RidgeParams,
    StackingParams, VotingParams, XgbParams, DEFAULT_COMBINER_MEMBERS,
};
use crate::error::{Error, Result};
use crate::features::ImportanceConfig;
use crate::physical::PvPlantParams;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub n_days: usize,
    pub minutes_per_sample: usize,
    pub noise_sigma_fraction: f64,
    pub cloud_event_rate: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSection {
            n_days: d.n_days,
            minutes_per_sample: d.minutes_per_sample,
            noise_sigma_fraction: d.noise_sigma_fraction,
            cloud_event_rate: d.cloud_event_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VotingSection {
    pub members: Vec<ModelKind>,
    pub weights: Option<Vec<f64>>,
    pub vote_classes: Option<usize>,
}

impl Default for VotingSection {
    fn default() -> Self {
        VotingSection {
            members: DEFAULT_COMBINER_MEMBERS.to_vec(),
            weights: None,
            vote_classes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackingSection {
    pub members: Vec<ModelKind>,
    pub n_folds: usize,
}

impl Default for StackingSection {
    fn default() -> Self {
        StackingSection {
            members: DEFAULT_COMBINER_MEMBERS.to_vec(),
            n_folds: 5,
        }
    }
}

/// Per-kind hyperparameter blocks plus the comparison roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsSection {
    /// Kinds run by `compare` when no explicit list is given.
    pub roster: Vec<ModelKind>,
    /// Tree and stage counts are divided by this (1 keeps the tuned values).
    pub estimator_divisor: usize,
    pub linear: LinearParams,
    pub ridge: RidgeParams,
    pub elastic_net: ElasticNetParams,
    pub knn: KnnParams,
    pub random_forest: ForestParams,
    pub extra_trees: ExtraTreesParams,
    pub adaboost_r2: AdaBoostParams,
    pub gbm: GbmParams,
    pub xgb: XgbParams,
    pub goss_gbm: GossParams,
    pub hist_gbm: HistGbmParams,
    pub voting: VotingSection,
    pub stacking: StackingSection,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection {
            roster: ModelKind::ALL.to_vec(),
            estimator_divisor: 1,
            linear: Default::default(),
            ridge: Default::default(),
            elastic_net: Default::default(),
            knn: Default::default(),
            random_forest: Default::default(),
            extra_trees: Default::default(),
            adaboost_r2: Default::default(),
            gbm: Default::default(),
            xgb: Default::default(),
            goss_gbm: Default::default(),
            hist_gbm: Default::default(),
            voting: Default::default(),
            stacking: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub target_name: String,
    pub power_threshold_watts: f64,
    pub correlation_threshold: f64,
    pub split_ratio: f64,
    pub seed: u64,
    pub repeats: usize,
    pub importance: ImportanceConfig,
    pub kde_grid_size: usize,
    pub synth: SynthSection,
    pub plant: PvPlantParams,
    pub models: ModelsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            output_dir: PathBuf::from("out"),
            target_name: "Power".into(),
            power_threshold_watts: 500.0,
            correlation_threshold: 0.95,
            split_ratio: 0.8,
            seed: 73,
            repeats: 20,
            importance: ImportanceConfig::default(),
            kde_grid_size: 256,
            synth: SynthSection::default(),
            plant: PvPlantParams::default(),
            models: ModelsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config("split_ratio must be in (0, 1)".into()));
        }
        if !(self.correlation_threshold > 0.0 && self.correlation_threshold <= 1.0) {
            return Err(Error::Config("correlation_threshold must be in (0, 1]".into()));
        }
        if self.repeats < 1 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if self.kde_grid_size < 2 {
            return Err(Error::Config("kde_grid_size must be >= 2".into()));
        }
        if self.models.estimator_divisor < 1 {
            return Err(Error::Config("estimator_divisor must be >= 1".into()));
        }
        let combiner = |members: &[ModelKind]| {
            if members.iter().any(|k| matches!(k, ModelKind::Voting | ModelKind::Stacking)) {
                Err(Error::Config("combiner members cannot be voting or stacking".into()))
            } else {
                Ok(())
            }
        };
        combiner(&self.models.voting.members)?;
        combiner(&self.models.stacking.members)?;
        self.synth_config().validate()?;
        for kind in &self.models.roster {
            self.spec(*kind)?;
        }
        Ok(())
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            n_days: self.synth.n_days,
            minutes_per_sample: self.synth.minutes_per_sample,
            seed: self.seed,
            noise_sigma_fraction: self.synth.noise_sigma_fraction,
            cloud_event_rate: self.synth.cloud_event_rate,
            plant: self.plant.clone(),
        }
    }

    fn raw_params(&self, kind: ModelKind) -> Hyperparams {
        let m = &self.models;
        let members = |kinds: &[ModelKind]| {
            kinds
                .iter()
                .map(|&k| ModelSpec {
                    params: self.raw_params(k),
                    seed: self.seed,
                })
                .collect()
        };
        match kind {
            ModelKind::Linear => Hyperparams::Linear(m.linear.clone()),
            ModelKind::Ridge => Hyperparams::Ridge(m.ridge.clone()),
            ModelKind::ElasticNet => Hyperparams::ElasticNet(m.elastic_net.clone()),
            ModelKind::Knn => Hyperparams::Knn(m.knn.clone()),
            ModelKind::RandomForest => Hyperparams::RandomForest(m.random_forest.clone()),
            ModelKind::ExtraTrees => Hyperparams::ExtraTrees(m.extra_trees.clone()),
            ModelKind::AdaboostR2 => Hyperparams::AdaboostR2(m.adaboost_r2.clone()),
            ModelKind::Gbm => Hyperparams::Gbm(m.gbm.clone()),
            ModelKind::Xgb => Hyperparams::Xgb(m.xgb.clone()),
            ModelKind::GossGbm => Hyperparams::GossGbm(m.goss_gbm.clone()),
            ModelKind::HistGbm => Hyperparams::HistGbm(m.hist_gbm.clone()),
            ModelKind::Voting => Hyperparams::Voting(VotingParams {
                bases: members(&m.voting.members),
                weights: m.voting.weights.clone(),
                vote_classes: m.voting.vote_classes,
            }),
            ModelKind::Stacking => Hyperparams::Stacking(StackingParams {
                bases: members(&m.stacking.members),
                n_folds: m.stacking.n_folds,
            }),
        }
    }

    /// Validated spec for `kind` with the configured seed and estimator divisor.
    pub fn spec(&self, kind: ModelKind) -> Result<ModelSpec> {
        let mut params = self.raw_params(kind);
        params.scale_estimators(self.models.estimator_divisor);
        ModelSpec::new(params, self.seed).map_err(|e| Error::Config(format!("models.{kind}: {e}")))
    }

    pub fn roster_specs(&self, kinds: &[ModelKind]) -> Result<Vec<ModelSpec>> {
        kinds.iter().map(|&k| self.spec(k)).collect()
    }
}
