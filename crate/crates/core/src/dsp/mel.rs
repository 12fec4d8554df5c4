use crate::diff::Tensor;
use crate::error::{arg_err, Error, Result};
use crate::scalar::Scalar;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// The `n_mels + 2` band edges in Hz, uniform on the mel scale from 0 to Nyquist.
/// Entries `1..=n_mels` are the filter centers.
pub fn mel_band_edges(n_mels: usize, sample_rate: u32) -> Vec<f64> {
    let top = hz_to_mel(sample_rate as f64 / 2.0);
    let steps = (n_mels + 1) as f64;
    (0..n_mels + 2)
        .map(|j| mel_to_hz(top * j as f64 / steps))
        .collect()
}

/// Triangular mel filters `[n_mels, fft_size/2 + 1]`, each row normalized to unit sum.
///
/// A band layout in which two consecutive edges round to the same FFT bin is
/// rejected: such a filter would cover no bin.
pub fn mel_filterbank<S: Scalar>(fft_size: usize, n_mels: usize, sample_rate: u32) -> Result<Tensor<S>> {
    if n_mels == 0 || n_mels >= fft_size / 2 {
        return arg_err(format!("need 0 < n_mels < fft_size/2, got n_mels {n_mels} for fft_size {fft_size}"));
    }
    if sample_rate == 0 {
        return arg_err("sample rate must be positive");
    }
    let bins = fft_size / 2 + 1;
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let edges = mel_band_edges(n_mels, sample_rate);
    let nearest: Vec<i64> = edges.iter().map(|f| (f / bin_hz).round() as i64).collect();
    if let Some(j) = nearest.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "mel edges {j} and {} ({:.2} Hz, {:.2} Hz) fall in the same {bin_hz:.2} Hz bin; \
             use fewer mel bands or a larger FFT",
            j + 1,
            edges[j],
            edges[j + 1]
        )));
    }
    let mut data = vec![0.0f64; n_mels * bins];
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let row = &mut data[m * bins..(m + 1) * bins];
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            let rise = (f - lo) / (center - lo);
            let fall = (hi - f) / (hi - center);
            *w = rise.min(fall).max(0.0);
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= total);
    }
    Tensor::new(vec![n_mels, bins], data.into_iter().map(S::cast).collect())
}

/// Largest band count `<= limit` for which [`mel_filterbank`] is well formed.
pub fn max_mel_bands(fft_size: usize, sample_rate: u32, limit: usize) -> Option<usize> {
    let upper = limit.min((fft_size / 2).saturating_sub(1));
    (1..=upper)
        .rev()
        .find(|&m| mel_filterbank::<f64>(fft_size, m, sample_rate).is_ok())
}
