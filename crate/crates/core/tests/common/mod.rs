//! Helpers shared by the integration tests: random instances, gradient-check
//! harnesses for every differentiable operation, and brute-force spectral oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use audio_inr::diff::{
    conv1d_strided, conv1d_strided_backward, dense, dense_backward, elu, elu_backward, grad_check, relu,
    relu_backward, sin_scaled, sin_scaled_backward, GradCheckReport, ParamStore, Tensor,
};
use audio_inr::dsp::{LossConfig, SpectralLoss, StftConfig};
use audio_inr::hypernet::{Hypernetwork, HypernetworkSpec};
use audio_inr::inr::{init_instance_weights, init_shared_weights, TargetKind, TargetNetwork, TargetNetworkSpec, Variant};
use audio_inr::signal::AudioClip;
use audio_inr::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALL_VARIANTS: [Variant; 4] = [Variant::Standard, Variant::Residual, Variant::Modulated, Variant::Shared];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn cast<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::cast(x)).collect()
}

pub fn tensor<S: Scalar>(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<S> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), cast(&uniform(rng, n, lo, hi))).unwrap()
}

pub fn dot<S: Scalar>(a: &[S], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.as_f64() * y).sum()
}

/// Store holding `values` with `grads` already accumulated.
fn store<S: Scalar>(entries: Vec<(&str, Tensor<S>, Vec<S>)>) -> ParamStore<S> {
    let mut s = ParamStore::new();
    for (name, value, grad) in entries {
        s.insert(name, value).unwrap();
        s.accumulate_grad(name, &grad).unwrap();
    }
    s
}

/// Gradient tolerance for the scalar width.
pub fn tolerance<S: Scalar>() -> f64 {
    if std::mem::size_of::<S>() == 4 {
        1e-4
    } else {
        1e-6
    }
}

pub fn check_dense<S: Scalar>(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let (rows, fan_in, fan_out) = (r.random_range(1..5), r.random_range(1..8), r.random_range(1..6));
    let x = tensor::<S>(&mut r, &[rows, fan_in], -1.0, 1.0);
    let w = tensor::<S>(&mut r, &[fan_out, fan_in], -1.0, 1.0);
    let b = tensor::<S>(&mut r, &[fan_out], -1.0, 1.0);
    let proj = uniform(&mut r, rows * fan_out, -1.0, 1.0);
    let dy = Tensor::new(vec![rows, fan_out], cast::<S>(&proj)).unwrap();
    let g = dense_backward(&x, &w, &dy).unwrap();
    let s = store(vec![
        ("x", x, g.input.into_data()),
        ("w", w, g.weight.into_data()),
        ("b", b, g.bias.into_data()),
    ]);
    grad_check(
        &s,
        |p| dot(dense(p.value("x").unwrap(), p.value("w").unwrap(), p.value("b").unwrap()).unwrap().data(), &proj),
        tolerance::<S>(),
    )
    .unwrap()
}

pub fn check_conv1d<S: Scalar>(seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let stride = r.random_range(1..5);
    let (batch, c_in, c_out) = (r.random_range(1..3), r.random_range(1..4), r.random_range(1..4));
    let len = r.random_range(stride..30);
    let k = 2 * stride + 1;
    let x = tensor::<S>(&mut r, &[batch, c_in, len], -1.0, 1.0);
    let w = tensor::<S>(&mut r, &[c_out, c_in, k], -1.0, 1.0);
    let b = tensor::<S>(&mut r, &[c_out], -1.0, 1.0);
    let out_len = len.div_ceil(stride);
    let proj = uniform(&mut r, batch * c_out * out_len, -1.0, 1.0);
    let dy = Tensor::new(vec![batch, c_out, out_len], cast::<S>(&proj)).unwrap();
    let g = conv1d_strided_backward(&x, &w, &b, stride, &dy).unwrap();
    let s = store(vec![
        ("input", x, g.input.into_data()),
        ("kernel", w, g.kernel.into_data()),
        ("bias", b, g.bias.into_data()),
    ]);
    grad_check(
        &s,
        |p| {
            let y = conv1d_strided(p.value("input").unwrap(), p.value("kernel").unwrap(), p.value("bias").unwrap(), stride)
                .unwrap();
            dot(y.data(), &proj)
        },
        tolerance::<S>(),
    )
    .unwrap()
}

#[derive(Clone, Copy, Debug)]
pub enum Act {
    Relu,
    Elu,
    Sin,
}

pub fn check_activation<S: Scalar>(act: Act, seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let n = r.random_range(4..32);
    let omega = r.random_range(1.0..30.0);
    let z = tensor::<S>(&mut r, &[n], -2.0, 2.0);
    let proj = uniform(&mut r, n, -1.0, 1.0);
    let dy = Tensor::new(vec![n], cast::<S>(&proj)).unwrap();
    let g = match act {
        Act::Relu => relu_backward(&z, &dy),
        Act::Elu => elu_backward(&z, &dy),
        Act::Sin => sin_scaled_backward(&z, omega, &dy),
    }
    .unwrap();
    let s = store(vec![("z", z, g.into_data())]);
    grad_check(
        &s,
        |p| {
            let z = p.value("z").unwrap();
            let y = match act {
                Act::Relu => relu(z),
                Act::Elu => elu(z),
                Act::Sin => sin_scaled(z, omega),
            };
            dot(y.data(), &proj)
        },
        tolerance::<S>(),
    )
    .unwrap()
}

/// Reduced multi-resolution configuration for finite differences.
pub fn small_loss_config(r: &mut ChaCha8Rng) -> LossConfig {
    let mut cfg = LossConfig {
        lambda_t: r.random_range(0.1..2.0),
        lambda_f: r.random_range(0.1..2.0),
        stft: StftConfig { fft_sizes: vec![64, 32, 16], n_mels: 16 },
        ..LossConfig::default()
    };
    cfg.weighting.p = [0.0, 0.2, 0.5, 1.0][r.random_range(0..4)];
    cfg
}

pub fn check_loss<S: Scalar>(total: bool, seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let cfg = small_loss_config(&mut r);
    let sr = [8000u32, 16000, 22050][r.random_range(0..3)];
    let n = r.random_range(64..160);
    let epoch = r.random_range(0..800);
    let x64 = uniform(&mut r, n, -0.8, 0.8);
    let xhat = tensor::<S>(&mut r, &[n], -0.8, 0.8);
    let loss = SpectralLoss::<S>::new(&cfg, sr).unwrap();
    let x: Vec<S> = cast(&x64);
    let grad = if total {
        loss.total_loss_with_grad(&x, xhat.data(), epoch).unwrap().1
    } else {
        loss.mel_stft_loss_with_grad(&x, xhat.data(), epoch).unwrap().1
    };
    let reference = SpectralLoss::<f64>::new(&cfg, sr).unwrap();
    let x64: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let s = store(vec![("xhat", xhat, grad)]);
    grad_check(
        &s,
        |p| {
            let xhat = p.value("xhat").unwrap().data();
            if total {
                reference.total_loss(&x64, xhat, epoch).unwrap().total
            } else {
                reference.mel_stft_loss(&x64, xhat, epoch).unwrap()
            }
        },
        tolerance::<S>(),
    )
    .unwrap()
}

/// First-layer SIREN frequency for gradient checks: 2000 in `f64`, 30 in `f32`.
pub fn check_omega_0<S: Scalar>() -> f64 {
    if std::mem::size_of::<S>() == 4 {
        30.0
    } else {
        2000.0
    }
}

pub fn small_target(kind: TargetKind, variant: Variant, omega_0: f64) -> TargetNetworkSpec {
    let base = match kind {
        TargetKind::Fmlp => TargetNetworkSpec { embedding_l: 4, ..TargetNetworkSpec::fmlp(vec![6, 5]) },
        TargetKind::Siren => TargetNetworkSpec::siren(vec![6, 5], omega_0, 30.0),
    };
    let shared = if variant == Variant::Shared { 1 } else { 0 };
    base.with_variant(variant, shared)
}

/// Shared weights of a variant, drawn away from the degenerate starting points.
pub fn random_shared(spec: &TargetNetworkSpec, r: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let n = spec.shared_layout().total();
    match spec.variant {
        Variant::Standard => None,
        Variant::Modulated => Some(uniform(r, n, 0.5, 1.5)),
        _ => Some(init_shared_weights::<f64, _>(spec, r)),
    }
}

pub fn check_target<S: Scalar>(kind: TargetKind, variant: Variant, seed: u64) -> GradCheckReport {
    check_target_at::<S>(kind, variant, check_omega_0::<S>(), seed)
}

pub fn check_target_at<S: Scalar>(kind: TargetKind, variant: Variant, omega_0: f64, seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let spec = small_target(kind, variant, omega_0);
    let net = TargetNetwork::<S>::new(spec.clone()).unwrap();
    let reference = TargetNetwork::<f64>::new(spec.clone()).unwrap();
    let theta: Vec<S> = cast(&init_instance_weights::<f64, _>(&spec, &mut r));
    let shared: Option<Vec<S>> = random_shared(&spec, &mut r).map(|v| cast(&v));
    let rows = 24;
    let coords: Vec<S> = cast(&uniform(&mut r, rows, -1.0, 1.0));
    let proj = uniform(&mut r, rows, -1.0, 1.0);
    let features = net.features(&coords).unwrap();
    let trace = net.forward_traced(&theta, shared.as_deref(), &features).unwrap();
    let grads = net.backward(&theta, shared.as_deref(), &trace, &cast::<S>(&proj)).unwrap();
    let mut entries = vec![("theta", Tensor::vector(theta).unwrap(), grads.instance)];
    if let Some(sh) = shared {
        entries.push(("shared", Tensor::vector(sh).unwrap(), grads.shared));
    }
    let s = store(entries);
    let coords64: Vec<f64> = coords.iter().map(|c| c.as_f64()).collect();
    let features64 = reference.features(&coords64).unwrap();
    grad_check(
        &s,
        |p| {
            let theta = p.value("theta").unwrap().data();
            let shared = p.get("shared").map(|s| s.data());
            dot(&reference.forward_features(theta, shared, &features64).unwrap(), &proj)
        },
        tolerance::<S>(),
    )
    .unwrap()
}

pub fn tiny_hyper_spec(kind: TargetKind, variant: Variant) -> HypernetworkSpec {
    let target = match kind {
        TargetKind::Fmlp => TargetNetworkSpec { embedding_l: 2, ..TargetNetworkSpec::fmlp(vec![4, 3]) },
        TargetKind::Siren => TargetNetworkSpec::siren(vec![4, 3], 30.0, 30.0),
    };
    let shared = if variant == Variant::Shared { 1 } else { 0 };
    HypernetworkSpec {
        input_len: 24,
        encoder_strides: vec![2, 3],
        encoder_channels: vec![3, 2],
        head_hidden: vec![7, 5],
        target: target.with_variant(variant, shared),
    }
}

/// Checks every hypernetwork parameter against `Σ r·θ + Σ q·shared` for a small batch.
pub fn check_hypernetwork<S: Scalar>(kind: TargetKind, variant: Variant, seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let spec = tiny_hyper_spec(kind, variant);
    let mut net = Hypernetwork::<S>::new(spec.clone(), seed).unwrap();
    let batch = 3;
    let clips = tensor::<S>(&mut r, &[batch, spec.input_len], -1.0, 1.0);
    let proj = uniform(&mut r, batch * spec.output_dim(), -1.0, 1.0);
    let shared_proj = uniform(&mut r, spec.target.shared_layout().total(), -1.0, 1.0);
    let trace = net.forward_traced(&clips).unwrap();
    let d_shared = net.target().requires_shared().then(|| cast::<S>(&shared_proj));
    net.backward(&trace, &cast::<S>(&proj), d_shared.as_deref()).unwrap();
    let clips64 = clips.cast::<f64>();
    grad_check(
        net.params(),
        |p| {
            let h = Hypernetwork::<f64>::from_params(spec.clone(), p.clone()).unwrap();
            let theta: Vec<f64> =
                h.generate_batch(&clips64).unwrap().into_iter().flat_map(|w| w.into_flat()).collect();
            let mut v = dot(&theta, &proj);
            if let Some(shared) = h.shared() {
                v += dot(shared, &shared_proj);
            }
            v
        },
        tolerance::<S>(),
    )
    .unwrap()
}

/// Periodic Hann window evaluated directly from its definition.
pub fn naive_hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Complex spectrum `[frames][bins]` by the O(N²) DFT sum, no centering.
pub fn naive_stft(x: &[f64], n: usize, hop: usize) -> Vec<Vec<(f64, f64)>> {
    let w = naive_hann(n);
    // e^{-2πim/n} for every residue m of k·t mod n
    let twiddle: Vec<(f64, f64)> = (0..n)
        .map(|m| {
            let angle = -2.0 * PI * m as f64 / n as f64;
            (angle.cos(), angle.sin())
        })
        .collect();
    let mut frames = Vec::new();
    let mut start = 0;
    while start + n <= x.len() {
        let seg: Vec<f64> = (0..n).map(|t| w[t] * x[start + t]).collect();
        let row = (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in seg.iter().enumerate() {
                    let (c, s) = twiddle[(k * t) % n];
                    re += v * c;
                    im += v * s;
                }
                (re, im)
            })
            .collect();
        frames.push(row);
        start += hop;
    }
    frames
}

pub fn naive_stft_mag(x: &[f64], n: usize, hop: usize) -> Vec<Vec<f64>> {
    naive_stft(x, n, hop)
        .into_iter()
        .map(|row| row.into_iter().map(|(re, im)| re.hypot(im)).collect())
        .collect()
}

/// Log-spectral distance: 2048-point frames, hop 512, power floor 1e-10, log base 10.
pub fn naive_lsd(x: &[f64], y: &[f64]) -> f64 {
    let a = naive_stft(x, 2048, 512);
    let b = naive_stft(y, 2048, 512);
    let p = |(re, im): (f64, f64)| (re * re + im * im + 1e-10).log10();
    let per_frame: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(fa, fb)| {
            let sq: f64 = fa.iter().zip(fb).map(|(&u, &v)| (p(u) - p(v)).powi(2)).sum();
            (sq / fa.len() as f64).sqrt()
        })
        .collect();
    per_frame.iter().sum::<f64>() / per_frame.len() as f64
}

/// Sum of sinusoids `(freq Hz, amplitude)` sampled at `sr`.
pub fn sines(parts: &[(f64, f64)], len: usize, sr: u32) -> Vec<f64> {
    (0..len)
        .map(|i| parts.iter().map(|(f, a)| a * (2.0 * PI * f * i as f64 / sr as f64).sin()).sum())
        .collect()
}

/// Harmonic tones with a light noise floor, `count` clips of `len` samples.
pub fn harmonic_dataset(count: usize, len: usize, sr: u32, seed: u64) -> Vec<AudioClip<f32>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let f0 = r.random_range(100.0..300.0);
            let parts: Vec<(f64, f64, f64)> =
                (1..=8).map(|k| (f0 * k as f64, 0.3 / k as f64, r.random_range(0.0..2.0 * PI))).collect();
            let samples = (0..len)
                .map(|i| {
                    let t = i as f64 / sr as f64;
                    let tone: f64 = parts.iter().map(|(f, a, ph)| a * (2.0 * PI * f * t + ph).sin()).sum();
                    (tone + 0.01 * r.random_range(-1.7..1.7)) as f32
                })
                .collect();
            AudioClip::new(samples, sr).unwrap()
        })
        .collect()
}
