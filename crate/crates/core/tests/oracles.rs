mod common;

use audio_inr::dsp::{freq_weights, stft_mag, LossConfig, SpectralLoss, StftConfig};
use audio_inr::inr::{TargetNetwork, TargetNetworkSpec, Variant};
use audio_inr::metrics::si_snr;
use common::*;
use proptest::prelude::*;

/// HTK triangles on a mel-uniform grid from 0 Hz to Nyquist, rows scaled to unit sum.
fn oracle_filterbank(fft: usize, n_mels: usize, sr: u32) -> Vec<Vec<f64>> {
    let mel = |hz: f64| 2595.0 * (1.0 + hz / 700.0).log10();
    let hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let top = mel(sr as f64 / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2).map(|j| hz(top * j as f64 / (n_mels + 1) as f64)).collect();
    (0..n_mels)
        .map(|m| {
            let row: Vec<f64> = (0..=fft / 2)
                .map(|k| {
                    let f = k as f64 * sr as f64 / fft as f64;
                    let up = (f - edges[m]) / (edges[m + 1] - edges[m]);
                    let down = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
                    up.min(down).max(0.0)
                })
                .collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Frequency term of the loss for one resolution: spectral convergence plus mean |log-mel diff|.
fn oracle_resolution(x: &[f64], y: &[f64], fft: usize, n_mels: usize, sr: u32, weights: &[f64], eps: f64) -> f64 {
    let bank = oracle_filterbank(fft, n_mels, sr);
    let mel_spec = |sig: &[f64]| -> Vec<f64> {
        naive_stft(sig, fft, fft / 4)
            .into_iter()
            .flat_map(|frame| {
                let mag: Vec<f64> =
                    frame.iter().zip(weights).map(|(&(re, im), w)| (re * re + im * im + 1e-12).sqrt() * w).collect();
                bank.iter().map(move |row| row.iter().zip(&mag).map(|(a, b)| a * b).sum::<f64>()).collect::<Vec<_>>()
            })
            .collect()
    };
    let (a, b) = (mel_spec(x), mel_spec(y));
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|t| t * t).sum::<f64>().sqrt();
    let sc = norm(&mut a.iter().zip(&b).map(|(p, q)| p - q)) / norm(&mut a.iter().copied());
    let log_l1 = a.iter().zip(&b).map(|(p, q)| ((p + eps).ln() - (q + eps).ln()).abs()).sum::<f64>() / a.len() as f64;
    sc + log_l1
}

#[test]
fn multi_resolution_loss_matches_direct_evaluation() {
    let mut r = rng(21);
    for (sr, p, epoch) in [(16000u32, 0.0, 0), (22050, 0.5, 600), (8000, 1.0, 250)] {
        let mut cfg = LossConfig { stft: StftConfig { fft_sizes: vec![256, 128], n_mels: 20 }, ..LossConfig::default() };
        cfg.weighting.p = p;
        let loss = SpectralLoss::<f64>::new(&cfg, sr).unwrap();
        let x = uniform(&mut r, 700, -0.5, 0.5);
        let y = uniform(&mut r, 700, -0.5, 0.5);
        let got = loss.total_loss(&x, &y, epoch).unwrap();

        let mut freq = 0.0;
        for (index, &fft) in cfg.stft.fft_sizes.iter().enumerate() {
            let n_mels = loss.mel_bands()[index];
            let target = freq_weights(fft / 2 + 1, p).unwrap();
            let alpha = (epoch as f64 / 500.0).min(1.0);
            let w: Vec<f64> = target.iter().map(|t| 1.0 - alpha + alpha * t).collect();
            freq += oracle_resolution(&x, &y, fft, n_mels, sr, &w, cfg.epsilon) / 2.0;
        }
        let time = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64;
        assert!((got.freq - freq).abs() < 1e-9 * freq, "{} vs {freq}", got.freq);
        assert!((got.time - time).abs() < 1e-12);
        assert!((got.total - (time + freq)).abs() < 1e-9);
    }
}

#[test]
fn mel_band_clamp_keeps_coarse_resolutions_well_formed() {
    let loss = SpectralLoss::<f64>::new(&LossConfig::default(), 16000).unwrap();
    let bands = loss.mel_bands();
    assert_eq!(bands.len(), 5);
    assert!(bands.windows(2).all(|w| w[0] >= w[1]), "{bands:?}");
    assert!(bands[4] < 128);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stft_magnitudes_match_the_dft_sum(seed in 0u64..1000, fft_pow in 4u32..9, extra in 0usize..300) {
        let fft = 1usize << fft_pow;
        let mut r = rng(seed);
        let x = uniform(&mut r, fft + extra, -1.0, 1.0);
        let fast = stft_mag(&x, fft, fft / 4).unwrap();
        let slow = naive_stft_mag(&x, fft, fft / 4);
        prop_assert_eq!(fast.shape()[0], slow.len());
        for (a, b) in fast.data().iter().zip(slow.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn si_snr_matches_projection_formula(seed in 0u64..1000, len in 8usize..400, noise in 0.01f64..2.0) {
        let mut r = rng(seed);
        let x = uniform(&mut r, len, -1.0, 1.0);
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v + noise * uniform(&mut r, 1, -1.0, 1.0)[0]).collect();
        let center = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| a - m).collect::<Vec<_>>()
        };
        let (xc, yc) = (center(&x), center(&y));
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let s: Vec<f64> = xc.iter().map(|v| v * dot(&yc, &xc) / dot(&xc, &xc)).collect();
        let e: Vec<f64> = yc.iter().zip(&s).map(|(a, b)| a - b).collect();
        let expected = (10.0 * (dot(&s, &s) / dot(&e, &e)).log10()).clamp(-100.0, 100.0);
        prop_assert!((si_snr(&x, &y).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn degenerate_variants_reduce_to_standard(seed in 0u64..1000, width in 2usize..12, depth in 1usize..4, siren in any::<bool>()) {
        let base = if siren {
            TargetNetworkSpec::siren(vec![width; depth], 2000.0, 30.0)
        } else {
            TargetNetworkSpec::fmlp(vec![width; depth])
        };
        let standard = TargetNetwork::<f64>::new(base.clone()).unwrap();
        let n = standard.param_count();
        let theta = uniform(&mut rng(seed), n, -0.5, 0.5);
        let reference = standard.render(&theta, None, 257).unwrap();
        let residual = TargetNetwork::<f64>::new(base.clone().with_variant(Variant::Residual, 0)).unwrap();
        prop_assert_eq!(residual.render(&vec![0.0; n], Some(&theta), 257).unwrap(), reference.clone());
        let modulated = TargetNetwork::<f64>::new(base.with_variant(Variant::Modulated, 0)).unwrap();
        prop_assert_eq!(modulated.render(&theta, Some(&vec![1.0; n]), 257).unwrap(), reference);
    }
}
