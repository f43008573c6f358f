//! Run configuration read from a TOML file. Command-line flags override file
//! values; the API key only ever comes from the environment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lsa_core::benchmark::{validate_fraction, DEFAULT_FRACTIONS};
use lsa_core::eval::{Aggregation, DEFAULT_KS};
use lsa_core::llm::DecodeConfig;
use lsa_core::losses::LossConfig;
use lsa_core::parse_llm::ParseOptions;
use lsa_core::pipeline::{AnticipateConfig, PipelineMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

/// Offline completion backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MockKind {
    /// Repeat the last observed frame.
    EchoLastFrame,
    /// Replay stored outputs keyed by prompt hash.
    Fixture,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub reports: Option<PathBuf>,
    /// JSON map from prompt hash to stored completion.
    pub fixture: Option<PathBuf>,
    /// JSONL request log.
    pub request_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub fractions: Vec<f64>,
    pub ks: Vec<usize>,
    pub aggregation: Aggregation,
    pub mode: PipelineMode,
    pub mock: Option<MockKind>,
    /// Which bundled model outputs the fixture backend replays.
    pub fixture_model: String,
    pub seed: u64,
    /// Concurrent videos, and in-flight requests of the client.
    pub parallelism: usize,
    pub one_shot: bool,
    pub prompt_budget: Option<usize>,
    pub normalize_names: bool,
    pub decode: DecodeConfig,
    pub loss: LossConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            ks: DEFAULT_KS.to_vec(),
            aggregation: Aggregation::Macro,
            mode: PipelineMode::WithGoa,
            mock: None,
            fixture_model: "finetuned".into(),
            seed: 0,
            parallelism: 4,
            one_shot: false,
            prompt_budget: None,
            normalize_names: false,
            decode: DecodeConfig::default(),
            loss: LossConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| UsageError::new(format!("config schema mismatch: {e}")).into())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError::new(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// The config file, or defaults when none is given.
    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> anyhow::Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for f in &self.fractions {
            validate_fraction(*f).map_err(|e| UsageError::new(e.to_string()))?;
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            bail!(UsageError::new("K values must be positive"));
        }
        if self.parallelism == 0 {
            bail!(UsageError::new("parallelism must be at least 1"));
        }
        self.decode.validate().map_err(|e| UsageError::new(e.to_string()))?;
        let beta = self.loss.beta;
        if !(0.0..=1.0).contains(&beta) {
            bail!(UsageError::new(format!("loss.beta {beta} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn anticipate(&self) -> AnticipateConfig {
        AnticipateConfig {
            one_shot: self.one_shot,
            parse: ParseOptions {
                normalize: self.normalize_names,
            },
            prompt_budget: self.prompt_budget,
            parallelism: self.parallelism,
            shuffle_seed: None,
        }
    }
}

/// Fails unless `path` is an existing file.
pub fn require_file(path: &Path, what: &str) -> anyhow::Result<()> {
    if !path.is_file() {
        bail!(UsageError::new(format!("{what} not found: {}", path.display())));
    }
    Ok(())
}

/// Fails unless the directory `path` would be written into exists.
pub fn require_parent(path: &Path) -> anyhow::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            bail!(UsageError::new(format!("output directory does not exist: {}", p.display())))
        }
        _ => Ok(()),
    }
}

/// A value from a flag, else the config file, else a usage error.
pub fn pick_path(flag: Option<PathBuf>, file: &Option<PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| UsageError::new(format!("no {what} given (flag or config)")).into())
}
