//! Pipeline configuration. Everything that affects reproducibility lives in
//! one TOML file: data paths, the two embedding providers, the cache and
//! model locations, training hyperparameters, the seed, and the individual
//! preprocessing toggles. Command-line flags only pick the command and the
//! input/output paths.

use std::path::{Path, PathBuf};

use crate::corpus::Language;
use crate::embed::{
    EmbeddingProvider, ExternalBackend, ExternalProvider, HashEmbedder, PooledTransformerProvider,
    PoolingSpec, LASER_DIM, TRANSFORMER_DIM,
};
use crate::error::{Error, Result};
use crate::model::GbdtConfig;
use crate::preprocess::NormalizeRules;

/// Environment variable that overrides the configured cache path.
pub const CACHE_ENV_VAR: &str = "OFFLANG_CACHE";

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    /// Deterministic hash embedder; no weights needed.
    Test,
    /// Child process replying with finished vectors.
    External,
    /// Child process replying with per-layer token embeddings, pooled here.
    ExternalLayers,
}

/// One provider slot of the pipeline config.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSpec {
    pub kind: ProviderKind,
    pub output_dim: usize,
    #[serde(default)]
    pub provider_id: Option<String>,
    /// Test kind: hash seed. Defaults to the pipeline seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// External kinds: the runner command line.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    /// External-layers kind: pooling configuration.
    #[serde(default)]
    pub pooling: Option<PoolingSpec>,
}

impl ProviderSpec {
    fn test(output_dim: usize) -> Self {
        ProviderSpec {
            kind: ProviderKind::Test,
            output_dim,
            provider_id: None,
            seed: None,
            command: None,
            pooling: None,
        }
    }

    fn validate(&self, slot: &str) -> Result<()> {
        match self.kind {
            ProviderKind::Test => Ok(()),
            ProviderKind::External | ProviderKind::ExternalLayers => {
                if self.command.as_ref().is_none_or(Vec::is_empty) {
                    return Err(Error::Config(format!(
                        "providers.{slot}: external provider needs a non-empty command"
                    )));
                }
                if self.provider_id.is_none() {
                    return Err(Error::Config(format!(
                        "providers.{slot}: external provider needs an explicit provider_id"
                    )));
                }
                Ok(())
            }
        }
    }

    fn build(&self, default_seed: u64) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match self.kind {
            ProviderKind::Test => {
                let seed = self.seed.unwrap_or(default_seed);
                match &self.provider_id {
                    Some(id) => Box::new(HashEmbedder::with_provider_id(
                        self.output_dim,
                        seed,
                        id.clone(),
                    )),
                    None => Box::new(HashEmbedder::new(self.output_dim, seed)),
                }
            }
            ProviderKind::External => {
                let id = self.provider_id.clone().expect("validated");
                Box::new(ExternalProvider::new(
                    self.command.clone().expect("validated"),
                    id,
                    self.output_dim,
                ))
            }
            ProviderKind::ExternalLayers => {
                let id = self.provider_id.clone().expect("validated");
                let backend =
                    ExternalBackend::new(self.command.clone().expect("validated"), id.clone());
                Box::new(PooledTransformerProvider::new(
                    Box::new(backend),
                    self.pooling.unwrap_or_default(),
                    id,
                    self.output_dim,
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProvidersConfig {
    pub transformer: ProviderSpec,
    pub laser: ProviderSpec,
}

impl Default for ProvidersConfig {
    fn default() -> Self {
        ProvidersConfig {
            transformer: ProviderSpec::test(TRANSFORMER_DIM),
            laser: ProviderSpec::test(LASER_DIM),
        }
    }
}

fn default_seed() -> u64 {
    42
}

/// The one artifact that fully determines a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub language: Language,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub data: DataPaths,
    #[serde(default)]
    pub cache: CacheConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub providers: ProvidersConfig,
    #[serde(default)]
    pub train: GbdtConfig,
    #[serde(default)]
    pub preprocess: NormalizeRules,
}

impl PipelineConfig {
    pub fn new(language: Language) -> Self {
        PipelineConfig {
            language,
            seed: default_seed(),
            data: DataPaths::default(),
            cache: CacheConfig::default(),
            model: ModelConfig::default(),
            providers: ProvidersConfig::default(),
            train: GbdtConfig::default(),
            preprocess: NormalizeRules::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: PipelineConfig = toml::from_str(&raw)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Fail-fast checks, before any data is touched.
    pub fn validate(&self) -> Result<()> {
        if self.providers.transformer.output_dim != TRANSFORMER_DIM
            || self.providers.laser.output_dim != LASER_DIM
        {
            return Err(Error::Config(format!(
                "provider dimensions must be {TRANSFORMER_DIM} and {LASER_DIM}, configured {} and {}",
                self.providers.transformer.output_dim, self.providers.laser.output_dim
            )));
        }
        self.providers.transformer.validate("transformer")?;
        self.providers.laser.validate("laser")?;
        Ok(())
    }

    /// Cache path with the environment override applied.
    pub fn cache_path(&self) -> Option<PathBuf> {
        if let Ok(p) = std::env::var(CACHE_ENV_VAR) {
            if !p.is_empty() {
                return Some(PathBuf::from(p));
            }
        }
        self.cache.path.clone()
    }

    pub fn build_transformer(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.providers.transformer.build(self.seed)
    }

    pub fn build_laser(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.providers.laser.build(self.seed)
    }
}
