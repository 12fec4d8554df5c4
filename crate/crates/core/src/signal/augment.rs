use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::error::{arg_err, Error, Result};
use crate::scalar::Scalar;

/// Random crop, phase mangling and dequantization noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationConfig {
    /// Length of the random crop in samples.
    pub crop_length: usize,
    /// Dequantization noise is uniform in `±2^-(bits-1)`. Zero disables it.
    pub dequantize_bits: u32,
    pub phase_mangle: bool,
    /// Interval the all-pass coefficient is drawn from; must lie inside (-1, 1).
    pub allpass_coeff_range: (f64, f64),
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            crop_length: 32768,
            dequantize_bits: 16,
            phase_mangle: true,
            allpass_coeff_range: (-0.5, 0.5),
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.allpass_coeff_range;
        if self.crop_length == 0 {
            return Err(Error::Config("crop_length must be positive".into()));
        }
        if !(lo > -1.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::Config(format!(
                "allpass_coeff_range ({lo}, {hi}) must be an ordered interval inside (-1, 1)"
            )));
        }
        if self.dequantize_bits > 32 {
            return Err(Error::Config("dequantize_bits must be at most 32".into()));
        }
        Ok(())
    }
}

/// First-order all-pass `y[n] = a·x[n] + x[n-1] - a·y[n-1]` with zero initial state.
pub fn allpass_first_order<S: Scalar>(x: &[S], a: f64) -> Vec<S> {
    let a = S::cast(a);
    let mut prev_x = S::zero();
    let mut prev_y = S::zero();
    x.iter()
        .map(|&v| {
            let y = a * v + prev_x - a * prev_y;
            prev_x = v;
            prev_y = y;
            y
        })
        .collect()
}

/// Applies crop, then optional phase mangle, then dequantization noise, then clamps to `[-1, 1]`.
///
/// The result depends only on the inputs and `seed`.
pub fn augment<S: Scalar>(clip: &AudioClip<S>, cfg: &AugmentationConfig, seed: u64) -> Result<AudioClip<S>> {
    cfg.validate()?;
    if cfg.crop_length > clip.len() {
        return arg_err(format!(
            "crop length {} exceeds clip length {}",
            cfg.crop_length,
            clip.len()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..=clip.len() - cfg.crop_length);
    let mut out = clip.samples()[start..start + cfg.crop_length].to_vec();

    if cfg.phase_mangle {
        let (lo, hi) = cfg.allpass_coeff_range;
        let a = if lo < hi { rng.random_range(lo..hi) } else { lo };
        out = allpass_first_order(&out, a);
    }

    if cfg.dequantize_bits > 0 {
        let bound = 2f64.powi(-(cfg.dequantize_bits as i32 - 1));
        for v in out.iter_mut() {
            // open interval (-bound, bound)
            let u = loop {
                let r: f64 = rng.random();
                if r > 0.0 {
                    break (2.0 * r - 1.0) * bound;
                }
            };
            *v = S::cast(v.as_f64() + u);
        }
    }

    AudioClip::clamped(out, clip.sample_rate())
}
