//! TOML run configuration: [data], [features], [windows], [model],
//! [ablation] and [synth] sections, every field defaulted.

use crate::ablation::AblationMode;
use crate::learn::{ForestParams, HyperGrid, MaxFeaturesRule};
use crate::synth::CohortConfig;
use crate::types::DEFAULT_AU_IDS;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub sessions: PathBuf,
    pub surveys: PathBuf,
    /// AU ids labelling the 12 positional intensity channels.
    pub au_ids: Vec<u8>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            sessions: PathBuf::from("out/sessions.jsonl"),
            surveys: PathBuf::from("out/surveys.csv"),
            au_ids: DEFAULT_AU_IDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaScope {
    /// Fit once on every session of the run.
    Global,
    /// Refit per LOPO fold on the training participants' frames.
    PerFold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturesConfig {
    /// Keep every n-th within-region pair (1 = all).
    pub pair_stride: usize,
    pub pca_components: usize,
    pub pca_scope: PcaScope,
    /// Cap on PCA fitting rows, taken by uniform stride; 0 = unlimited.
    pub pca_max_rows: usize,
    /// "nose_mean" or a landmark index.
    pub centroid_index: Option<usize>,
    pub eps: f64,
    pub emit_acceleration: bool,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            pair_stride: 1,
            pca_components: 10,
            pca_scope: PcaScope::Global,
            pca_max_rows: 4096,
            centroid_index: None,
            eps: 1e-9,
            emit_acceleration: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowsConfig {
    pub at_moment_minutes: i64,
    pub lags: Vec<u32>,
}

impl Default for WindowsConfig {
    fn default() -> Self {
        WindowsConfig {
            at_moment_minutes: 30,
            lags: vec![1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub seed: u64,
    pub n_trees: usize,
    /// "sqrt", "all", or a fixed count.
    pub max_features: String,
    pub smote_k: usize,
    /// 0 stands for unlimited depth.
    pub max_depth_grid: Vec<usize>,
    pub min_samples_leaf_grid: Vec<usize>,
    pub min_impurity_decrease: f64,
    pub f1_threshold: f64,
    pub audit_rows: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            seed: 17,
            n_trees: 100,
            max_features: "sqrt".to_string(),
            smote_k: 5,
            max_depth_grid: vec![3, 5, 8, 0],
            min_samples_leaf_grid: vec![1, 5, 10],
            min_impurity_decrease: 0.0,
            f1_threshold: 0.5,
            audit_rows: false,
        }
    }
}

impl ModelConfig {
    pub fn hyper_grid(&self) -> HyperGrid {
        HyperGrid {
            max_depth: self
                .max_depth_grid
                .iter()
                .map(|&d| if d == 0 { None } else { Some(d) })
                .collect(),
            min_samples_leaf: self.min_samples_leaf_grid.clone(),
            min_impurity_decrease: self.min_impurity_decrease,
        }
    }

    pub fn forest_params(&self) -> Result<ForestParams, ConfigError> {
        let max_features = match self.max_features.as_str() {
            "sqrt" => MaxFeaturesRule::Sqrt,
            "all" => MaxFeaturesRule::All,
            other => match other.parse::<usize>() {
                Ok(n) if n > 0 => MaxFeaturesRule::Fixed(n),
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "max_features must be \"sqrt\", \"all\" or a positive integer, got {other:?}"
                    )))
                }
            },
        };
        Ok(ForestParams {
            n_trees: self.n_trees,
            max_features,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub modes: Vec<AblationMode>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            modes: vec![AblationMode::RemoveGroup, AblationMode::OnlyGroup],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub features: FeaturesConfig,
    pub windows: WindowsConfig,
    pub model: ModelConfig,
    pub ablation: AblationConfig,
    pub synth: CohortConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            source: e,
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(e),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.data.au_ids.len() != crate::types::N_AU {
            return Err(ConfigError::Invalid(format!(
                "au_ids must list exactly {} ids",
                crate::types::N_AU
            )));
        }
        let mut ids = self.data.au_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != crate::types::N_AU {
            return Err(ConfigError::Invalid("au_ids must be distinct".into()));
        }
        if self.features.pca_components == 0 {
            return Err(ConfigError::Invalid("pca_components must be positive".into()));
        }
        if self.windows.at_moment_minutes <= 0 {
            return Err(ConfigError::Invalid(
                "at_moment_minutes must be positive".into(),
            ));
        }
        if self.windows.lags.is_empty()
            || self.windows.lags.iter().any(|&l| ![1, 2, 4, 8].contains(&l))
        {
            return Err(ConfigError::Invalid(
                "lags must be a non-empty subset of {1, 2, 4, 8}".into(),
            ));
        }
        if self.model.max_depth_grid.is_empty() || self.model.min_samples_leaf_grid.is_empty() {
            return Err(ConfigError::Invalid("hyperparameter grid is empty".into()));
        }
        self.model.forest_params()?;
        Ok(())
    }

    /// Reference TOML with every default spelled out.
    pub fn reference_toml() -> String {
        toml::to_string_pretty(&RunConfig::default()).expect("serializable defaults")
    }
}
