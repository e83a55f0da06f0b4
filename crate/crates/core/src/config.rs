//! TOML configuration. Every section and key is optional and falls back to
//! the defaults of the corresponding library type.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::IngestOptions;
use crate::pipeline::PipelineConfig;
use crate::synth::SyntheticSpec;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub pipeline: PipelineConfig,
    pub synth: SyntheticSpec,
    pub ingest: IngestOptions,
    pub split: SplitConfig,
}

/// How `synth` splits generated data into a training part and a held-out horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Trailing whole years written as the forecast horizon.
    pub test_years: u32,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_years: 1 }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.synth.validate()?;
        if self.split.test_years >= self.synth.years {
            return Err(Error::Config(format!(
                "split.test_years ({}) must be smaller than synth.years ({})",
                self.split.test_years, self.synth.years
            )));
        }
        Ok(())
    }
}
