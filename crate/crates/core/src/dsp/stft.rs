use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::diff::Tensor;
use crate::error::{arg_err, Result};
use crate::scalar::Scalar;

/// Stabilizer inside the magnitude square root, keeping its derivative finite at zero.
pub const MAGNITUDE_EPS: f64 = 1e-12;

/// Periodic Hann window of length `n`.
pub fn hann_window<S: Scalar>(n: usize) -> Vec<S> {
    (0..n)
        .map(|t| S::cast(0.5 - 0.5 * (2.0 * PI * t as f64 / n as f64).cos()))
        .collect()
}

/// Complex spectrum and magnitudes of every frame, row-major `[frames, bins]`.
#[derive(Clone, Debug)]
pub struct Spectrogram<S> {
    pub frames: usize,
    pub bins: usize,
    pub re: Vec<S>,
    pub im: Vec<S>,
    pub mag: Vec<S>,
}

/// Hann-windowed short-time Fourier transform without center padding.
/// Frame `f` covers samples `f·hop .. f·hop + fft_size`.
#[derive(Clone)]
pub struct Stft<S: Scalar> {
    fft_size: usize,
    hop: usize,
    window: Vec<S>,
    forward: Arc<dyn Fft<S>>,
    inverse: Arc<dyn Fft<S>>,
}

impl<S: Scalar> fmt::Debug for Stft<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stft").field("fft_size", &self.fft_size).field("hop", &self.hop).finish()
    }
}

impl<S: Scalar> Stft<S> {
    pub fn new(fft_size: usize, hop: usize) -> Result<Self> {
        if fft_size < 2 || hop == 0 {
            return arg_err(format!("invalid STFT geometry: fft_size {fft_size}, hop {hop}"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            fft_size,
            hop,
            window: hann_window(fft_size),
            forward: planner.plan_fft_forward(fft_size),
            inverse: planner.plan_fft_inverse(fft_size),
        })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.fft_size {
            0
        } else {
            1 + (len - self.fft_size) / self.hop
        }
    }

    pub fn forward(&self, x: &[S]) -> Result<Spectrogram<S>> {
        if x.len() < self.fft_size {
            return arg_err(format!(
                "signal of {} samples is shorter than the {}-point FFT",
                x.len(),
                self.fft_size
            ));
        }
        let frames = self.frame_count(x.len());
        let bins = self.bins();
        let eps = S::cast(MAGNITUDE_EPS);
        let mut spec = Spectrogram {
            frames,
            bins,
            re: Vec::with_capacity(frames * bins),
            im: Vec::with_capacity(frames * bins),
            mag: Vec::with_capacity(frames * bins),
        };
        let mut buf = vec![Complex::new(S::zero(), S::zero()); self.fft_size];
        for f in 0..frames {
            let seg = &x[f * self.hop..f * self.hop + self.fft_size];
            for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex::new(v * w, S::zero());
            }
            self.forward.process(&mut buf);
            for c in &buf[..bins] {
                spec.re.push(c.re);
                spec.im.push(c.im);
                spec.mag.push((c.re * c.re + c.im * c.im + eps).sqrt());
            }
        }
        Ok(spec)
    }

    /// Gradient w.r.t. the input signal given `d_mag`, the gradient w.r.t. `spec.mag`.
    pub fn backward(&self, spec: &Spectrogram<S>, d_mag: &[S], len: usize) -> Vec<S> {
        let bins = spec.bins;
        let mut dx = vec![S::zero(); len];
        let zero = Complex::new(S::zero(), S::zero());
        let mut buf = vec![zero; self.fft_size];
        for f in 0..spec.frames {
            let row = f * bins;
            buf.fill(zero);
            for k in 0..bins {
                let g = d_mag[row + k] / spec.mag[row + k];
                buf[k] = Complex::new(g * spec.re[row + k], g * spec.im[row + k]);
            }
            // Re(Σ_k G_k e^{+2πikt/n}) is the adjoint of the real-input DFT restricted to k <= n/2.
            self.inverse.process(&mut buf);
            let seg = &mut dx[f * self.hop..f * self.hop + self.fft_size];
            for ((d, c), &w) in seg.iter_mut().zip(&buf).zip(&self.window) {
                *d += w * c.re;
            }
        }
        dx
    }
}

/// Magnitude spectrogram `[frames, fft_size/2 + 1]`.
pub fn stft_mag<S: Scalar>(x: &[S], fft_size: usize, hop: usize) -> Result<Tensor<S>> {
    let spec = Stft::new(fft_size, hop)?.forward(x)?;
    Tensor::new(vec![spec.frames, spec.bins], spec.mag)
}
