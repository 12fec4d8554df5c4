//! Reconstruction metrics: MSE, log-spectral distance and SI-SNR.

use std::io::Write;

use crate::dsp::Stft;
use crate::error::{arg_err, Error, Result};
use crate::scalar::Scalar;

pub const LSD_FFT_SIZE: usize = 2048;
pub const LSD_HOP: usize = 512;
/// Added to every power bin before taking the logarithm.
pub const LSD_POWER_FLOOR: f64 = 1e-10;
/// SI-SNR values are clamped to `±SI_SNR_LIMIT` dB.
pub const SI_SNR_LIMIT: f64 = 100.0;
/// References with a norm below this (after mean removal) make SI-SNR undefined.
pub const SILENCE_NORM: f64 = 1e-12;

fn check_pair<S>(x: &[S], xhat: &[S]) -> Result<()> {
    if x.len() != xhat.len() {
        return arg_err(format!("signal lengths differ: {} vs {}", x.len(), xhat.len()));
    }
    if x.is_empty() {
        return arg_err("empty signals");
    }
    Ok(())
}

/// Mean of squared differences.
pub fn mse<S: Scalar>(x: &[S], xhat: &[S]) -> Result<f64> {
    check_pair(x, xhat)?;
    let sum: f64 = x.iter().zip(xhat).map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2)).sum();
    Ok(sum / x.len() as f64)
}

/// Log-spectral distance with 2048-point Hann frames and a hop of 512.
///
/// Per frame, the RMS over bins of `log10 P(x) - log10 P(x̂)` with `P = |X|² + 1e-10`;
/// averaged over frames. Needs at least 2048 samples.
pub fn lsd<S: Scalar>(x: &[S], xhat: &[S]) -> Result<f64> {
    check_pair(x, xhat)?;
    if x.len() < LSD_FFT_SIZE {
        return arg_err(format!("LSD needs at least {LSD_FFT_SIZE} samples, got {}", x.len()));
    }
    let stft = Stft::<f64>::new(LSD_FFT_SIZE, LSD_HOP)?;
    let a = stft.forward(&crate::convert::<S, f64>(x))?;
    let b = stft.forward(&crate::convert::<S, f64>(xhat))?;
    let log_power = |re: f64, im: f64| (re * re + im * im + LSD_POWER_FLOOR).log10();
    let mut total = 0.0;
    for f in 0..a.frames {
        let row = f * a.bins..(f + 1) * a.bins;
        let sq: f64 = row
            .map(|i| (log_power(a.re[i], a.im[i]) - log_power(b.re[i], b.im[i])).powi(2))
            .sum();
        total += (sq / a.bins as f64).sqrt();
    }
    Ok(total / a.frames as f64)
}

/// Scale-invariant SNR in dB after removing the mean of both signals, clamped to ±100 dB.
///
/// A silent reference makes the metric undefined.
pub fn si_snr<S: Scalar>(x: &[S], xhat: &[S]) -> Result<f64> {
    check_pair(x, xhat)?;
    let centered = |v: &[S]| {
        let mean = v.iter().map(|s| s.as_f64()).sum::<f64>() / v.len() as f64;
        v.iter().map(|s| s.as_f64() - mean).collect::<Vec<f64>>()
    };
    let (x, xhat) = (centered(x), centered(xhat));
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy.sqrt() < SILENCE_NORM {
        return Err(Error::UndefinedMetric("SI-SNR of a silent reference".into()));
    }
    let alpha = x.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / energy;
    let (mut target, mut noise) = (0.0, 0.0);
    for (a, b) in x.iter().zip(&xhat) {
        let s = alpha * a;
        target += s * s;
        noise += (b - s) * (b - s);
    }
    let db = 10.0 * (target / noise).log10();
    Ok(if db.is_nan() { -SI_SNR_LIMIT } else { db.clamp(-SI_SNR_LIMIT, SI_SNR_LIMIT) })
}

/// Metrics of one reconstruction. `None` marks a metric that is undefined for the input
/// (silent reference for SI-SNR, fewer than 2048 samples for LSD).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub lsd: Option<f64>,
    pub si_snr: Option<f64>,
}

impl MetricsReport {
    pub fn compute<S: Scalar>(x: &[S], xhat: &[S]) -> Result<Self> {
        let mse = mse(x, xhat)?;
        let lsd = if x.len() >= LSD_FFT_SIZE { Some(lsd(x, xhat)?) } else { None };
        let si_snr = match si_snr(x, xhat) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { mse, lsd, si_snr })
    }
}

pub const METRICS_CSV_HEADER: &str = "clip_id,mse,lsd,si_snr";

/// Writes `clip_id,mse,lsd,si_snr` rows; undefined metrics are written as `undefined`.
pub fn write_metrics_csv<W: Write>(out: &mut W, rows: &[(String, MetricsReport)]) -> Result<()> {
    writeln!(out, "{METRICS_CSV_HEADER}")?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| v.to_string());
    for (id, r) in rows {
        writeln!(out, "{},{},{},{}", id, r.mse, fmt(r.lsd), fmt(r.si_snr))?;
    }
    Ok(())
}
