//! Target networks: coordinate MLPs mapping time to amplitude.
//!
//! Two kinds are supported. FMLP applies a fixed sinusoidal positional
//! encoding followed by ReLU dense layers. SIREN uses `sin(ω·(xWᵀ + b))`
//! layers, with a distinct `ω` on the first layer. Both end in a linear
//! output layer.
//!
//! Weights come from two sources that are combined per layer according to a
//! [`Variant`]: an instance-specific vector θ (produced per clip) and an
//! optional set of shared weights learned across clips.

mod encoding;
mod export;
mod init;
mod layout;
mod network;
mod spec;

pub use encoding::positional_encoding;
pub use export::write_weight_matrix;
pub use init::{bias_bound, init_fit_weights, init_instance_weights, init_shared_weights, weight_bound};
pub use layout::{LayoutEntry, TensorRole, WeightLayout, WeightVector};
pub use network::{ForwardTrace, TargetGrads, TargetNetwork};
pub use spec::{compression_ratio, param_count, width_for_compression_ratio, TargetKind, TargetNetworkSpec, Variant};

/// Shared (cross-instance) weights use the same flat representation as θ.
pub type SharedWeights<S> = WeightVector<S>;
