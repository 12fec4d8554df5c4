//! Hypernetwork: a strided convolutional encoder followed by a dense head whose
//! output is the flat weight vector θ of a target network.

mod checkpoint;
mod network;
mod spec;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointHeader,
    CheckpointKind, TensorEntry, CHECKPOINT_MAGIC,
};
pub use network::{HyperTrace, Hypernetwork};
pub use spec::HypernetworkSpec;
