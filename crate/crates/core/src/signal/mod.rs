//! Audio ingestion, coordinate grids and training-time augmentation.

mod augment;
mod wav;

pub use augment::{allpass_first_order, augment, AugmentationConfig};
pub use wav::{load_wav, read_wav, save_wav, write_wav};

use crate::error::{arg_err, Result};
use crate::scalar::Scalar;

/// Default pipeline sample rate in Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 22050;

/// Mono waveform with amplitudes in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip<S> {
    samples: Vec<S>,
    sample_rate: u32,
}

impl<S: Scalar> AudioClip<S> {
    /// Validates that the clip is non-empty, finite and within `[-1, 1]`.
    pub fn new(samples: Vec<S>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return arg_err("audio clip must contain at least one sample");
        }
        if sample_rate == 0 {
            return arg_err("sample rate must be positive");
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite() || v.abs() > S::one()) {
            return arg_err(format!("sample {i} is outside [-1, 1]: {}", samples[i]));
        }
        Ok(Self { samples, sample_rate })
    }

    /// Builds a clip after clamping every sample to `[-1, 1]`. Non-finite values are rejected.
    pub fn clamped(samples: Vec<S>, sample_rate: u32) -> Result<Self> {
        let samples = samples.into_iter().map(|v| v.max(-S::one()).min(S::one())).collect();
        Self::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<S> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn cast<T: Scalar>(&self) -> AudioClip<T> {
        AudioClip { samples: crate::scalar::convert(&self.samples), sample_rate: self.sample_rate }
    }
}

/// Uniform time coordinates spanning `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateGrid<S> {
    coords: Vec<S>,
}

impl<S: Scalar> CoordinateGrid<S> {
    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// `n` points with `coords[i] = -1 + 2i/(n-1)`.
///
/// Each point is computed as `(2i - (n-1)) / (n-1)` from an exact integer
/// numerator, which makes the endpoints exactly ±1 and the grid exactly
/// antisymmetric.
pub fn make_grid<S: Scalar>(n: usize) -> Result<CoordinateGrid<S>> {
    if n < 2 {
        return arg_err(format!("a coordinate grid needs at least 2 points, got {n}"));
    }
    let span = (n - 1) as f64;
    let coords = (0..n)
        .map(|i| S::cast((2.0 * i as f64 - span) / span))
        .collect();
    Ok(CoordinateGrid { coords })
}
