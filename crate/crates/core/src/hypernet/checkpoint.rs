use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::HypernetworkSpec;
use crate::error::{Error, Result};
use crate::inr::{TargetNetworkSpec, WeightLayout};
use crate::scalar::Scalar;

/// File signature; the trailing digit is the format version.
pub const CHECKPOINT_MAGIC: &[u8; 5] = b"HSND1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointKind {
    /// Hypernetwork parameters (plus optimizer state when saved during training).
    Hypernetwork,
    /// A single fitted target network.
    Inr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub kind: CheckpointKind,
    pub target: TargetNetworkSpec,
    #[serde(default)]
    pub hypernet: Option<HypernetworkSpec>,
    pub instance_layout: WeightLayout,
    pub shared_layout: WeightLayout,
    pub sample_rate: u32,
    pub epoch: usize,
    pub step: usize,
    pub seed: u64,
    /// Payload tensors in storage order.
    pub tensors: Vec<TensorEntry>,
    /// Free-form run metadata (training configuration, optimizer counters).
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl CheckpointHeader {
    pub fn new(kind: CheckpointKind, target: TargetNetworkSpec, hypernet: Option<HypernetworkSpec>, sample_rate: u32) -> Self {
        Self {
            kind,
            instance_layout: target.instance_layout(),
            shared_layout: target.shared_layout(),
            target,
            hypernet,
            sample_rate,
            epoch: 0,
            step: 0,
            seed: 0,
            tensors: Vec::new(),
            extra: serde_json::Value::Null,
        }
    }
}

/// In-memory checkpoint: a JSON header plus 32-bit tensors in header order.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    data: Vec<Vec<f32>>,
}

impl Checkpoint {
    pub fn new(mut header: CheckpointHeader) -> Self {
        header.tensors.clear();
        Self { header, data: Vec::new() }
    }

    /// Appends a tensor, narrowing to `f32`.
    pub fn push_tensor<S: Scalar>(&mut self, name: impl Into<String>, shape: Vec<usize>, values: &[S]) -> Result<()> {
        let entry = TensorEntry { name: name.into(), shape };
        if entry.len() != values.len() {
            return Err(Error::Shape(format!("tensor {} declares {} values, got {}", entry.name, entry.len(), values.len())));
        }
        if self.header.tensors.iter().any(|t| t.name == entry.name) {
            return Err(Error::Argument(format!("duplicate checkpoint tensor {}", entry.name)));
        }
        self.data.push(values.iter().map(|v| v.as_f64() as f32).collect());
        self.header.tensors.push(entry);
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Option<(&TensorEntry, &[f32])> {
        let i = self.header.tensors.iter().position(|t| t.name == name)?;
        Some((&self.header.tensors[i], &self.data[i]))
    }

    /// Like [`Checkpoint::tensor`], converted to `S`; a missing tensor is a corruption error.
    pub fn require<S: Scalar>(&self, name: &str) -> Result<(Vec<usize>, Vec<S>)> {
        let (entry, data) =
            self.tensor(name).ok_or_else(|| Error::CorruptCheckpoint(format!("missing tensor {name}")))?;
        Ok((entry.shape.clone(), data.iter().map(|&v| S::cast(v as f64)).collect()))
    }

    pub fn tensors(&self) -> impl Iterator<Item = (&TensorEntry, &[f32])> {
        self.header.tensors.iter().zip(self.data.iter().map(Vec::as_slice))
    }
}

/// Serialises to `HSND1 | u32 LE header length | JSON header | f32 LE payload`.
pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&ckpt.header).map_err(|e| Error::Argument(format!("unserialisable header: {e}")))?;
    let header_len = u32::try_from(header.len()).map_err(|_| Error::Argument("checkpoint header too large".into()))?;
    let floats: usize = ckpt.data.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(CHECKPOINT_MAGIC.len() + 4 + header.len() + 4 * floats);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    for tensor in &ckpt.data {
        for v in tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let magic = CHECKPOINT_MAGIC.len();
    if bytes.len() < magic || &bytes[..4] != b"HSND" {
        return Err(Error::CheckpointFormat("missing HSND signature".into()));
    }
    if bytes[4] != CHECKPOINT_MAGIC[4] {
        return Err(Error::CheckpointFormat(format!(
            "unsupported format version {:?} (expected {:?})",
            bytes[4] as char, CHECKPOINT_MAGIC[4] as char
        )));
    }
    let corrupt = |m: String| Error::CorruptCheckpoint(m);
    let len_bytes = bytes.get(magic..magic + 4).ok_or_else(|| corrupt("truncated header length".into()))?;
    let header_len = u32::from_le_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
    let start = magic + 4;
    let header_bytes =
        bytes.get(start..start + header_len).ok_or_else(|| corrupt("truncated header".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(header_bytes).map_err(|e| corrupt(format!("unreadable header: {e}")))?;
    let payload = &bytes[start + header_len..];
    let declared: usize = header.tensors.iter().map(TensorEntry::len).sum();
    if payload.len() != 4 * declared {
        return Err(corrupt(format!(
            "header declares {declared} parameters but the payload holds {} bytes",
            payload.len()
        )));
    }
    let mut data = Vec::with_capacity(header.tensors.len());
    let mut offset = 0;
    for t in &header.tensors {
        let n = t.len();
        let values = payload[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        data.push(values);
        offset += 4 * n;
    }
    Ok(Checkpoint { header, data })
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    fs::write(path, encode_checkpoint(ckpt)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}
