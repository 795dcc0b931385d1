//! Pipeline configuration, read from a TOML file.
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use disrupt_core::classify::BackendConfig;
use disrupt_core::corpus::EligibilityCriteria;
use disrupt_core::regress::{Dependent, ModelSpec};
use disrupt_core::ThresholdMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{role} path does not exist: {path}")]
    MissingInput { role: &'static str, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    /// Journal allowlist, one name per line. Without it every journal is kept.
    #[serde(default)]
    pub allowlist: Option<PathBuf>,
    /// Response cache for the network classifier.
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisruptionSettings {
    pub thresholds: Vec<u32>,
    pub mode: ThresholdMode,
    /// Worker threads for the batch; 1 runs on the calling thread, 0 uses
    /// every core.
    pub threads: usize,
}

impl Default for DisruptionSettings {
    fn default() -> Self {
        Self {
            thresholds: vec![1, 2, 3, 5],
            mode: ThresholdMode::RefIndegree,
            threads: 1,
        }
    }
}

/// Where the `Conceptual` regressor comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// The chat classifier (or its stub).
    #[default]
    Classifier,
    /// Gold labels embedded in the corpus. Used for synthetic validation.
    Gold,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub stub: bool,
    pub label_source: LabelSource,
    pub backend: BackendConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub eligibility: EligibilityCriteria,
    #[serde(default)]
    pub disruption: DisruptionSettings,
    #[serde(default)]
    pub classifier: ClassifierSettings,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    /// Seed for synthetic generation.
    #[serde(default)]
    pub seed: u64,
}

pub fn default_models() -> Vec<String> {
    ["model1", "model2", "model3", "d1", "d2", "d3", "d5"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl PipelineConfig {
    /// Config with default settings reading `corpus` and writing to `out_dir`.
    pub fn new(corpus: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            paths: Paths {
                corpus: corpus.into(),
                allowlist: None,
                cache: None,
                out_dir: out_dir.into(),
            },
            eligibility: EligibilityCriteria::default(),
            disruption: DisruptionSettings::default(),
            classifier: ClassifierSettings::default(),
            models: default_models(),
            seed: 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })?;
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.paths.corpus);
        join(&mut self.paths.out_dir);
        if let Some(p) = self.paths.allowlist.as_mut() {
            join(p);
        }
        if let Some(p) = self.paths.cache.as_mut() {
            join(p);
        }
    }

    pub fn model_specs(&self) -> Result<Vec<ModelSpec>, ConfigError> {
        self.models
            .iter()
            .map(|m| ModelSpec::parse(m).map_err(|e| ConfigError::Invalid(e.to_string())))
            .collect()
    }

    /// Checks settings and that every input file exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.disruption;
        if d.thresholds.is_empty() {
            return Err(ConfigError::Invalid("disruption.thresholds is empty".into()));
        }
        if d.thresholds.contains(&0) {
            return Err(ConfigError::Invalid(
                "disruption thresholds must be at least 1".into(),
            ));
        }
        self.eligibility
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.classifier
            .backend
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for spec in self.model_specs()? {
            if let Dependent::Disruption(l) = spec.dependent {
                if !d.thresholds.contains(&l) {
                    return Err(ConfigError::Invalid(format!(
                        "model {} needs threshold {l}, which is not in disruption.thresholds",
                        spec.name
                    )));
                }
            }
        }
        if !self.paths.corpus.is_file() {
            return Err(ConfigError::MissingInput {
                role: "corpus",
                path: self.paths.corpus.clone(),
            });
        }
        if let Some(p) = &self.paths.allowlist {
            if !p.is_file() {
                return Err(ConfigError::MissingInput {
                    role: "allowlist",
                    path: p.clone(),
                });
            }
        }
        Ok(())
    }
}
