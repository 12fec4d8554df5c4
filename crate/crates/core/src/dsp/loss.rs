use serde::{Deserialize, Serialize};

use super::mel::{max_mel_bands, mel_filterbank};
use super::stft::Stft;
use super::weighting::{anneal_weights, freq_weights};
use crate::diff::kernels::{matmul_nn, matmul_nt};
use crate::error::{arg_err, Error, Result};
use crate::scalar::Scalar;

/// Below this reference norm the spectral-convergence term is skipped.
const SILENT_REFERENCE_NORM: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StftConfig {
    /// FFT sizes of the resolutions; window length equals the FFT size and hop is a quarter of it.
    pub fft_sizes: Vec<usize>,
    /// Requested mel band count. Resolutions too coarse for it use the largest well-formed count.
    pub n_mels: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { fft_sizes: vec![2048, 1024, 512, 256, 128], n_mels: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqWeighting {
    pub p: f64,
    pub anneal_epochs: usize,
}

impl Default for FreqWeighting {
    fn default() -> Self {
        Self { p: 0.0, anneal_epochs: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub lambda_t: f64,
    pub lambda_f: f64,
    pub stft: StftConfig,
    pub weighting: FreqWeighting,
    /// Log stabilizer for the log-mel term.
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_t: 1.0,
            lambda_f: 1.0,
            stft: StftConfig::default(),
            weighting: FreqWeighting::default(),
            epsilon: 1e-5,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lambda_t >= 0.0 && self.lambda_f >= 0.0) {
            return bad(format!("loss coefficients must be non-negative ({}, {})", self.lambda_t, self.lambda_f));
        }
        if self.lambda_t == 0.0 && self.lambda_f == 0.0 {
            return bad("lambda_t and lambda_f cannot both be zero".into());
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.weighting.p.is_nan() || self.weighting.p < 0.0 {
            return bad(format!("weighting exponent must be non-negative, got {}", self.weighting.p));
        }
        if self.stft.fft_sizes.is_empty() {
            return bad("at least one FFT size is required".into());
        }
        for &n in &self.stft.fft_sizes {
            if !n.is_power_of_two() || n < 8 {
                return bad(format!("FFT size {n} must be a power of two >= 8"));
            }
        }
        if self.stft.n_mels == 0 {
            return bad("n_mels must be positive".into());
        }
        Ok(())
    }

    pub fn max_fft_size(&self) -> usize {
        self.stft.fft_sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Loss value split into its time- and frequency-domain parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown<S> {
    pub total: S,
    /// Unweighted mean absolute error.
    pub time: S,
    /// Unweighted multi-resolution mel-STFT loss (zero when `lambda_f` is zero).
    pub freq: S,
}

#[derive(Clone, Debug)]
struct Resolution<S: Scalar> {
    stft: Stft<S>,
    n_mels: usize,
    filterbank: Vec<S>,
    target_weights: Vec<f64>,
}

/// Multi-resolution mel-STFT loss plus L1 time loss, with analytic gradients.
///
/// Per resolution, linear magnitudes of both signals are scaled by the
/// (annealed) frequency weights, projected onto the mel filterbank, and compared
/// with spectral convergence `‖M - M̂‖_F / ‖M‖_F` plus the mean absolute
/// log-mel difference. The frequency loss is the mean over resolutions.
#[derive(Clone, Debug)]
pub struct SpectralLoss<S: Scalar> {
    cfg: LossConfig,
    sample_rate: u32,
    resolutions: Vec<Resolution<S>>,
}

fn check_pair<S>(x: &[S], xhat: &[S]) -> Result<()> {
    if x.len() != xhat.len() {
        return arg_err(format!("signal lengths differ: {} vs {}", x.len(), xhat.len()));
    }
    if x.is_empty() {
        return arg_err("signals are empty");
    }
    Ok(())
}

/// Mean absolute error.
pub fn l1_loss<S: Scalar>(x: &[S], xhat: &[S]) -> Result<S> {
    check_pair(x, xhat)?;
    let sum: S = x.iter().zip(xhat).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(sum / S::count(x.len()))
}

/// Gradient of [`l1_loss`] w.r.t. `xhat`; zero where the signals agree.
pub fn l1_loss_grad<S: Scalar>(x: &[S], xhat: &[S]) -> Result<Vec<S>> {
    check_pair(x, xhat)?;
    let inv = S::one() / S::count(x.len());
    Ok(x.iter().zip(xhat).map(|(&a, &b)| sign(b - a) * inv).collect())
}

pub fn mse_loss<S: Scalar>(x: &[S], xhat: &[S]) -> Result<S> {
    check_pair(x, xhat)?;
    let sum: S = x.iter().zip(xhat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(sum / S::count(x.len()))
}

pub fn mse_loss_grad<S: Scalar>(x: &[S], xhat: &[S]) -> Result<Vec<S>> {
    check_pair(x, xhat)?;
    let scale = S::cast(2.0) / S::count(x.len());
    Ok(x.iter().zip(xhat).map(|(&a, &b)| (b - a) * scale).collect())
}

#[inline]
fn sign<S: Scalar>(v: S) -> S {
    if v > S::zero() {
        S::one()
    } else if v < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

impl<S: Scalar> SpectralLoss<S> {
    pub fn new(cfg: &LossConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate()?;
        let mut resolutions = Vec::new();
        if cfg.lambda_f > 0.0 {
            for &n in &cfg.stft.fft_sizes {
                let n_mels = max_mel_bands(n, sample_rate, cfg.stft.n_mels).ok_or_else(|| {
                    Error::Config(format!("no well-formed mel filterbank for FFT size {n} at {sample_rate} Hz"))
                })?;
                let filterbank = mel_filterbank::<S>(n, n_mels, sample_rate)?.into_data();
                resolutions.push(Resolution {
                    stft: Stft::new(n, n / 4)?,
                    n_mels,
                    filterbank,
                    target_weights: freq_weights(n / 2 + 1, cfg.weighting.p)?,
                });
            }
        }
        Ok(Self { cfg: cfg.clone(), sample_rate, resolutions })
    }

    pub fn config(&self) -> &LossConfig {
        &self.cfg
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Mel band count actually used at each resolution.
    pub fn mel_bands(&self) -> Vec<usize> {
        self.resolutions.iter().map(|r| r.n_mels).collect()
    }

    /// Frequency weights applied at resolution `index` during `epoch`.
    pub fn effective_weights(&self, index: usize, epoch: usize) -> Vec<f64> {
        anneal_weights(&self.resolutions[index].target_weights, epoch, self.cfg.weighting.anneal_epochs)
    }

    fn check_inputs(&self, x: &[S], xhat: &[S]) -> Result<()> {
        check_pair(x, xhat)?;
        if !self.resolutions.is_empty() && x.len() < self.cfg.max_fft_size() {
            return arg_err(format!(
                "signal of {} samples is shorter than the largest FFT size {}",
                x.len(),
                self.cfg.max_fft_size()
            ));
        }
        Ok(())
    }

    /// Mean over resolutions of spectral convergence plus log-mel L1.
    pub fn mel_stft_loss(&self, x: &[S], xhat: &[S], epoch: usize) -> Result<S> {
        self.check_inputs(x, xhat)?;
        self.freq_part(x, xhat, epoch, false).map(|(v, _)| v)
    }

    pub fn mel_stft_loss_with_grad(&self, x: &[S], xhat: &[S], epoch: usize) -> Result<(S, Vec<S>)> {
        self.check_inputs(x, xhat)?;
        self.freq_part(x, xhat, epoch, true).map(|(v, g)| (v, g.expect("requested")))
    }

    /// `lambda_t · L1 + lambda_f · mel_stft_loss`.
    pub fn total_loss(&self, x: &[S], xhat: &[S], epoch: usize) -> Result<LossBreakdown<S>> {
        self.check_inputs(x, xhat)?;
        let time = l1_loss(x, xhat)?;
        let (freq, _) = self.freq_part(x, xhat, epoch, false)?;
        Ok(self.combine(time, freq))
    }

    pub fn total_loss_with_grad(&self, x: &[S], xhat: &[S], epoch: usize) -> Result<(LossBreakdown<S>, Vec<S>)> {
        self.check_inputs(x, xhat)?;
        let time = l1_loss(x, xhat)?;
        let lt = S::cast(self.cfg.lambda_t);
        let lf = S::cast(self.cfg.lambda_f);
        let mut grad: Vec<S> = l1_loss_grad(x, xhat)?.into_iter().map(|g| g * lt).collect();
        let (freq, freq_grad) = self.freq_part(x, xhat, epoch, true)?;
        if let Some(fg) = freq_grad {
            for (g, f) in grad.iter_mut().zip(fg) {
                *g += lf * f;
            }
        }
        Ok((self.combine(time, freq), grad))
    }

    fn combine(&self, time: S, freq: S) -> LossBreakdown<S> {
        let total = S::cast(self.cfg.lambda_t) * time + S::cast(self.cfg.lambda_f) * freq;
        LossBreakdown { total, time, freq }
    }

    fn freq_part(&self, x: &[S], xhat: &[S], epoch: usize, want_grad: bool) -> Result<(S, Option<Vec<S>>)> {
        if self.resolutions.is_empty() {
            return Ok((S::zero(), want_grad.then(|| vec![S::zero(); x.len()])));
        }
        let eps = S::cast(self.cfg.epsilon);
        let inv_res = S::one() / S::count(self.resolutions.len());
        let mut total = S::zero();
        let mut grad = want_grad.then(|| vec![S::zero(); x.len()]);

        for (index, res) in self.resolutions.iter().enumerate() {
            let weights: Vec<S> = self.effective_weights(index, epoch).into_iter().map(S::cast).collect();
            let bins = res.stft.bins();
            let mels = res.n_mels;
            let spec_ref = res.stft.forward(x)?;
            let spec_est = res.stft.forward(xhat)?;
            let frames = spec_ref.frames;

            let project = |mag: &[S]| {
                let weighted: Vec<S> = mag
                    .chunks_exact(bins)
                    .flat_map(|row| row.iter().zip(&weights).map(|(&m, &w)| m * w))
                    .collect();
                let mut out = vec![S::zero(); frames * mels];
                matmul_nt(&weighted, &res.filterbank, frames, bins, mels, &mut out, false);
                out
            };
            let m_ref = project(&spec_ref.mag);
            let m_est = project(&spec_est.mag);

            let count = S::count(m_ref.len());
            let ref_norm = m_ref.iter().map(|&v| v * v).sum::<S>().sqrt();
            let diff_norm = m_ref.iter().zip(&m_est).map(|(&a, &b)| (a - b) * (a - b)).sum::<S>().sqrt();
            let use_sc = ref_norm.as_f64() >= SILENT_REFERENCE_NORM;
            let sc = if use_sc { diff_norm / ref_norm } else { S::zero() };
            let log_l1 = m_ref
                .iter()
                .zip(&m_est)
                .map(|(&a, &b)| ((a + eps).ln() - (b + eps).ln()).abs())
                .sum::<S>()
                / count;
            total += (sc + log_l1) * inv_res;

            if let Some(grad) = grad.as_mut() {
                let sc_scale = if use_sc && diff_norm > S::zero() {
                    inv_res / (diff_norm * ref_norm)
                } else {
                    S::zero()
                };
                let d_mel: Vec<S> = m_ref
                    .iter()
                    .zip(&m_est)
                    .map(|(&a, &b)| {
                        let d_log = sign((b + eps).ln() - (a + eps).ln()) / ((b + eps) * count);
                        (b - a) * sc_scale + d_log * inv_res
                    })
                    .collect();
                let mut d_weighted = vec![S::zero(); frames * bins];
                matmul_nn(&d_mel, &res.filterbank, frames, mels, bins, &mut d_weighted, false);
                for row in d_weighted.chunks_exact_mut(bins) {
                    for (d, &w) in row.iter_mut().zip(&weights) {
                        *d *= w;
                    }
                }
                let dx = res.stft.backward(&spec_est, &d_weighted, x.len());
                for (g, d) in grad.iter_mut().zip(dx) {
                    *g += d;
                }
            }
        }
        Ok((total, grad))
    }
}
