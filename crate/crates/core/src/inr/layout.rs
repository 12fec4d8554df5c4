use std::fmt;

use serde::{Deserialize, Serialize};

use super::spec::TargetNetworkSpec;
use crate::diff::Tensor;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorRole {
    #[serde(rename = "W")]
    Weight,
    #[serde(rename = "b")]
    Bias,
}

/// Location of one layer tensor inside a flat weight vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub layer: usize,
    pub role: TensorRole,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Ordered partition of a flat vector into per-layer `W` (`[fan_out, fan_in]`) and `b` tensors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightLayout {
    entries: Vec<LayoutEntry>,
    total: usize,
}

impl WeightLayout {
    pub(crate) fn for_layers(spec: &TargetNetworkSpec, layers: impl Iterator<Item = usize>) -> Self {
        let mut entries = Vec::new();
        let mut offset = 0;
        for layer in layers {
            let (fan_in, fan_out) = spec.layer_dims(layer);
            for (role, shape) in [(TensorRole::Weight, vec![fan_out, fan_in]), (TensorRole::Bias, vec![fan_out])] {
                let len: usize = shape.iter().product();
                entries.push(LayoutEntry { layer, role, shape, offset });
                offset += len;
            }
        }
        Self { entries, total: offset }
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn find(&self, layer: usize, role: TensorRole) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.layer == layer && e.role == role)
    }

    pub fn contains_layer(&self, layer: usize) -> bool {
        self.entries.iter().any(|e| e.layer == layer)
    }
}

impl fmt::Display for WeightLayout {
    /// Compact form such as `0.W[8x20]@0 0.b[8]@160 ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let role = match e.role {
                TensorRole::Weight => "W",
                TensorRole::Bias => "b",
            };
            let dims: Vec<String> = e.shape.iter().map(usize::to_string).collect();
            write!(f, "{}.{}[{}]@{}", e.layer, role, dims.join("x"), e.offset)?;
        }
        Ok(())
    }
}

/// Flat parameter vector θ of one target network, with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector<S> {
    flat: Vec<S>,
    layout: WeightLayout,
}

impl<S: Scalar> WeightVector<S> {
    pub fn unflatten(flat: Vec<S>, layout: WeightLayout) -> Result<Self> {
        if flat.len() != layout.total() {
            return shape_err(format!("layout needs {} values, got {}", layout.total(), flat.len()));
        }
        Ok(Self { flat, layout })
    }

    pub fn zeros(layout: WeightLayout) -> Self {
        Self { flat: vec![S::zero(); layout.total()], layout }
    }

    pub fn flatten(&self) -> Vec<S> {
        self.flat.clone()
    }

    pub fn into_flat(self) -> Vec<S> {
        self.flat
    }

    pub fn as_slice(&self) -> &[S] {
        &self.flat
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.flat
    }

    pub fn layout(&self) -> &WeightLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn slice(&self, layer: usize, role: TensorRole) -> Option<&[S]> {
        self.layout.find(layer, role).map(|e| &self.flat[e.range()])
    }

    pub fn tensor(&self, layer: usize, role: TensorRole) -> Option<Tensor<S>> {
        let e = self.layout.find(layer, role)?;
        Tensor::new(e.shape.clone(), self.flat[e.range()].to_vec()).ok()
    }
}
