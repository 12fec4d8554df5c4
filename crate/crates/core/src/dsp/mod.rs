//! Spectral machinery: STFT magnitudes, mel filterbanks, frequency weighting
//! and the combined time/frequency reconstruction loss.

mod loss;
mod mel;
mod stft;
mod weighting;

pub use loss::{
    l1_loss, l1_loss_grad, mse_loss, mse_loss_grad, FreqWeighting, LossBreakdown, LossConfig,
    SpectralLoss, StftConfig,
};
pub use mel::{hz_to_mel, max_mel_bands, mel_band_edges, mel_filterbank, mel_to_hz};
pub use stft::{hann_window, stft_mag, Spectrogram, Stft};
pub use weighting::{anneal_weights, freq_weights};
