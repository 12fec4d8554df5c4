use serde::{Deserialize, Serialize};

use crate::diff::conv1d_output_len;
use crate::error::{Error, Result};
use crate::inr::{param_count, TargetNetworkSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypernetworkSpec {
    /// Samples per input clip.
    pub input_len: usize,
    pub encoder_strides: Vec<usize>,
    /// Output channels of each encoder block.
    pub encoder_channels: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub target: TargetNetworkSpec,
}

impl Default for HypernetworkSpec {
    fn default() -> Self {
        Self {
            input_len: 32768,
            encoder_strides: vec![2, 4, 5, 8],
            encoder_channels: vec![8, 16, 32, 32],
            head_hidden: vec![400, 768, 768, 768, 768, 768, 400],
            target: TargetNetworkSpec::default(),
        }
    }
}

impl HypernetworkSpec {
    /// Small configuration for short clips: the default encoder with a two-layer head.
    pub fn desk(input_len: usize, target: TargetNetworkSpec) -> Self {
        Self { input_len, head_hidden: vec![256, 256], target, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.target.validate()?;
        if self.input_len == 0 {
            return bad("input_len must be positive".into());
        }
        if self.encoder_strides.is_empty() || self.encoder_strides.len() != self.encoder_channels.len() {
            return bad(format!(
                "encoder needs one channel count per stride ({} strides, {} channel counts)",
                self.encoder_strides.len(),
                self.encoder_channels.len()
            ));
        }
        if self.encoder_strides.contains(&0) || self.encoder_channels.contains(&0) || self.head_hidden.contains(&0) {
            return bad("strides, channels and head widths must be positive".into());
        }
        Ok(())
    }

    /// Kernel length of each encoder block: twice its stride plus one.
    pub fn kernel_sizes(&self) -> Vec<usize> {
        self.encoder_strides.iter().map(|s| 2 * s + 1).collect()
    }

    /// Frames in the encoder output, `ceil` applied per block.
    pub fn latent_frames(&self) -> usize {
        self.encoder_strides.iter().fold(self.input_len, |len, &s| conv1d_output_len(len, s))
    }

    pub fn latent_channels(&self) -> usize {
        self.encoder_channels.last().copied().unwrap_or(0)
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_frames() * self.latent_channels()
    }

    /// Output width of the head, `param_count(target)`.
    pub fn output_dim(&self) -> usize {
        param_count(&self.target)
    }

    /// `(fan_in, fan_out)` of each head layer including the final projection.
    pub fn head_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.head_hidden.len() + 1);
        let mut fan_in = self.latent_dim();
        for &w in self.head_hidden.iter().chain(std::iter::once(&self.output_dim())) {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims
    }
}
