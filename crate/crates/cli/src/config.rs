use std::path::Path;

use audio_inr::hypernet::HypernetworkSpec;
use audio_inr::inr::TargetNetworkSpec;
use audio_inr::train::{FitConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Hypernetwork layout; the target network comes from the `[target]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypernetSection {
    pub input_len: usize,
    pub encoder_strides: Vec<usize>,
    pub encoder_channels: Vec<usize>,
    pub head_hidden: Vec<usize>,
}

impl Default for HypernetSection {
    fn default() -> Self {
        let d = HypernetworkSpec::default();
        Self {
            input_len: d.input_len,
            encoder_strides: d.encoder_strides,
            encoder_channels: d.encoder_channels,
            head_hidden: d.head_hidden,
        }
    }
}

/// Contents of a `--config` TOML file. Every table is optional and unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub target: TargetNetworkSpec,
    pub hypernet: HypernetSection,
    pub fit: FitConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Self::parse("").map_err(CliError::usage);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// Parses a config; an absent `train.max_lr` follows the target kind.
    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let lr_given = table.get("train").and_then(|t| t.get("max_lr")).is_some();
        let mut cfg: Self = table.try_into().map_err(|e: toml::de::Error| e.to_string())?;
        if !lr_given {
            cfg.train.max_lr = TrainConfig::default_max_lr(cfg.target.kind);
        }
        Ok(cfg)
    }

    pub fn hypernetwork_spec(&self) -> HypernetworkSpec {
        let h = &self.hypernet;
        HypernetworkSpec {
            input_len: h.input_len,
            encoder_strides: h.encoder_strides.clone(),
            encoder_channels: h.encoder_channels.clone(),
            head_hidden: h.head_hidden.clone(),
            target: self.target.clone(),
        }
    }
}
