use serde::{Deserialize, Serialize};

use super::layout::WeightLayout;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Fmlp,
    Siren,
}

/// How instance weights (`h`) and shared weights (`s`) form each layer's parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `W = W^h`
    Standard,
    /// `W = W^s + W^h`
    Residual,
    /// `W = W^s ⊙ W^h`
    Modulated,
    /// `W = W^s` for the first `shared_layer_count` layers, `W^h` afterwards.
    Shared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetNetworkSpec {
    pub kind: TargetKind,
    /// Positional encoding size L (FMLP only); the encoding has 2L features.
    pub embedding_l: usize,
    pub hidden_widths: Vec<usize>,
    /// SIREN frequency factor of the first layer.
    pub omega_0: f64,
    /// SIREN frequency factor of the remaining sine layers.
    pub omega_i: f64,
    pub variant: Variant,
    pub shared_layer_count: usize,
}

impl Default for TargetNetworkSpec {
    fn default() -> Self {
        // five equal hidden layers; width 87 gives a compression ratio of ~1 for 32768 samples
        Self {
            kind: TargetKind::Fmlp,
            embedding_l: 10,
            hidden_widths: vec![87; 5],
            omega_0: 2000.0,
            omega_i: 30.0,
            variant: Variant::Standard,
            shared_layer_count: 0,
        }
    }
}

impl TargetNetworkSpec {
    pub fn fmlp(hidden_widths: Vec<usize>) -> Self {
        Self { kind: TargetKind::Fmlp, hidden_widths, ..Self::default() }
    }

    pub fn siren(hidden_widths: Vec<usize>, omega_0: f64, omega_i: f64) -> Self {
        Self { kind: TargetKind::Siren, hidden_widths, omega_0, omega_i, ..Self::default() }
    }

    pub fn with_variant(mut self, variant: Variant, shared_layer_count: usize) -> Self {
        self.variant = variant;
        self.shared_layer_count = shared_layer_count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return bad(format!("hidden widths must be non-empty and positive, got {:?}", self.hidden_widths));
        }
        if self.kind == TargetKind::Fmlp && self.embedding_l == 0 {
            return bad("embedding_l must be at least 1".into());
        }
        if self.kind == TargetKind::Fmlp && self.embedding_l > 30 {
            return bad(format!("embedding_l {} is too large", self.embedding_l));
        }
        if !self.omega_0.is_finite() || !self.omega_i.is_finite() {
            return bad("SIREN frequency factors must be finite".into());
        }
        if self.shared_layer_count >= self.num_layers() {
            return bad(format!(
                "shared_layer_count {} must be smaller than the layer count {}",
                self.shared_layer_count,
                self.num_layers()
            ));
        }
        if self.variant != Variant::Shared && self.shared_layer_count != 0 {
            return bad("shared_layer_count is only meaningful for the shared variant".into());
        }
        Ok(())
    }

    /// Dense layers including the linear output layer.
    pub fn num_layers(&self) -> usize {
        self.hidden_widths.len() + 1
    }

    /// Width of the first dense layer's input.
    pub fn input_width(&self) -> usize {
        match self.kind {
            TargetKind::Fmlp => 2 * self.embedding_l,
            TargetKind::Siren => 1,
        }
    }

    /// `(fan_in, fan_out)` of dense layer `layer`.
    pub fn layer_dims(&self, layer: usize) -> (usize, usize) {
        let fan_in = if layer == 0 { self.input_width() } else { self.hidden_widths[layer - 1] };
        let fan_out = self.hidden_widths.get(layer).copied().unwrap_or(1);
        (fan_in, fan_out)
    }

    /// Whether `layer` takes its weights from the instance vector θ.
    pub fn layer_is_instance(&self, layer: usize) -> bool {
        self.variant != Variant::Shared || layer >= self.shared_layer_count
    }

    /// Whether `layer` has shared weights.
    pub fn layer_is_shared(&self, layer: usize) -> bool {
        match self.variant {
            Variant::Standard => false,
            Variant::Residual | Variant::Modulated => true,
            Variant::Shared => layer < self.shared_layer_count,
        }
    }

    pub fn instance_layout(&self) -> WeightLayout {
        WeightLayout::for_layers(self, (0..self.num_layers()).filter(|&l| self.layer_is_instance(l)))
    }

    pub fn shared_layout(&self) -> WeightLayout {
        WeightLayout::for_layers(self, (0..self.num_layers()).filter(|&l| self.layer_is_shared(l)))
    }
}

/// Number of instance-specific parameters (shared layers excluded).
pub fn param_count(spec: &TargetNetworkSpec) -> usize {
    (0..spec.num_layers())
        .filter(|&l| spec.layer_is_instance(l))
        .map(|l| {
            let (i, o) = spec.layer_dims(l);
            i * o + o
        })
        .sum()
}

/// Input samples per instance-specific parameter.
pub fn compression_ratio(spec: &TargetNetworkSpec, input_len: usize) -> f64 {
    input_len as f64 / param_count(spec) as f64
}

/// Equal hidden width (keeping the template's depth) whose compression ratio is closest to `target`.
pub fn width_for_compression_ratio(template: &TargetNetworkSpec, input_len: usize, target: f64) -> usize {
    let depth = template.hidden_widths.len().max(1);
    let ratio_error = |w: usize| {
        let spec = TargetNetworkSpec { hidden_widths: vec![w; depth], ..template.clone() };
        (compression_ratio(&spec, input_len) / target - 1.0).abs()
    };
    (1..=8192).min_by(|&a, &b| ratio_error(a).total_cmp(&ratio_error(b))).unwrap_or(1)
}
