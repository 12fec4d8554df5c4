//! Implicit neural representations (INRs) of audio.
//!
//! A clip is represented by a small coordinate network mapping time to
//! amplitude. Networks are obtained either by fitting one clip directly
//! ([`train::fit_individual_inr`]) or by a hypernetwork that maps a raw
//! waveform to the full weight vector in a single forward pass
//! ([`hypernet::Hypernetwork::generate`]).
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). Training uses
//! `f32`; gradient checks and oracles use `f64`. Aliases for both precisions
//! are exported at the crate root.

pub mod diff;
pub mod dsp;
mod error;
pub mod hypernet;
pub mod inr;
pub mod metrics;
mod scalar;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
pub use scalar::{convert, Scalar};

pub type Tensor32 = diff::Tensor<f32>;
pub type Tensor64 = diff::Tensor<f64>;
pub type ParamStore32 = diff::ParamStore<f32>;
pub type ParamStore64 = diff::ParamStore<f64>;
pub type AudioClip32 = signal::AudioClip<f32>;
pub type AudioClip64 = signal::AudioClip<f64>;
pub type TargetNetwork32 = inr::TargetNetwork<f32>;
pub type TargetNetwork64 = inr::TargetNetwork<f64>;
pub type WeightVector32 = inr::WeightVector<f32>;
pub type WeightVector64 = inr::WeightVector<f64>;
pub type Hypernetwork32 = hypernet::Hypernetwork<f32>;
pub type Hypernetwork64 = hypernet::Hypernetwork<f64>;
pub type SpectralLoss32 = dsp::SpectralLoss<f32>;
pub type SpectralLoss64 = dsp::SpectralLoss<f64>;
