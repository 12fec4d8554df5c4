use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use audio_inr::hypernet::load_checkpoint;
use audio_inr::signal::{load_wav, save_wav, AudioClip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_audio-inr")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_tone(path: &Path, parts: &[(f64, f64)], len: usize, sr: u32) {
    let samples: Vec<f32> = (0..len)
        .map(|i| parts.iter().map(|(f, a)| a * (2.0 * PI * f * i as f64 / sr as f64).sin()).sum::<f64>() as f32)
        .collect();
    save_wav(&AudioClip::new(samples, sr).unwrap(), path).unwrap();
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const FIT_CONFIG: &str = r#"
[target]
kind = "siren"
hidden_widths = [32, 32, 32, 32, 32]
omega_0 = 2000.0
omega_i = 30.0

[fit]
steps = 600
lr = 1e-4
"#;

fn tiny_train_config(epochs: usize) -> String {
    format!(
        r#"
[target]
kind = "fmlp"
hidden_widths = [8, 8]
embedding_l = 6

[hypernet]
input_len = 1024
encoder_strides = [4, 4]
encoder_channels = [4, 4]
head_hidden = [16]

[train]
epochs = {epochs}
samples_per_epoch = 6
batch_size = 4
checkpoint_every = 2

[train.augmentation]
crop_length = 1024

[train.loss.stft]
fft_sizes = [256, 64]
n_mels = 32
"#
    )
}

/// Three one-second-ish tones in `dir/data`.
fn tiny_dataset(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    fs::create_dir_all(&data).unwrap();
    for (i, f) in [220.0, 330.0, 495.0].iter().enumerate() {
        write_tone(&data.join(format!("clip{i}.wav")), &[(*f, 0.5)], 1500, 8000);
    }
    data
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn fit_inr_writes_checkpoint_history_metrics_and_reconstruction() {
    let dir = TempDir::new().unwrap();
    let wav = dir.path().join("a440.wav");
    write_tone(&wav, &[(440.0, 0.5)], 4096, 8000);
    let cfg = write_config(dir.path(), "fit.toml", FIT_CONFIG);
    let out = dir.path().join("nested/out/a440.hsnd");
    let res = run(&["fit-inr", "--input", p(&wav), "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(out.exists());

    let metrics = read_csv(&out.with_extension("metrics.csv"));
    assert_eq!(metrics[0].join(","), "clip_id,mse,lsd,si_snr");
    assert_eq!(metrics[1][0], "a440");
    let si_snr: f64 = metrics[1][3].parse().unwrap();
    assert!(si_snr > 20.0, "si_snr {si_snr}");

    let history = read_csv(&out.with_extension("history.csv"));
    assert_eq!(history[0].join(","), "step,loss");
    assert_eq!(history.len(), 601);

    let recon = load_wav::<f32>(out.with_extension("recon.wav")).unwrap();
    assert_eq!(recon.len(), 4096);
    assert_eq!(recon.sample_rate(), 8000);

    // rendering at the training length reproduces the stored reconstruction
    let same = dir.path().join("same.wav");
    let res = run(&["render", "--checkpoint", p(&out), "--samples", "4096", "--out", p(&same)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert_eq!(fs::read(&same).unwrap(), fs::read(out.with_extension("recon.wav")).unwrap());

    let double = dir.path().join("double.wav");
    let res = run(&["render", "--checkpoint", p(&out), "--samples", "8192", "--out", p(&double)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let double = load_wav::<f32>(&double).unwrap();
    assert_eq!(double.len(), 8192);
    assert_eq!(double.sample_rate(), 16000);

    let res = run(&["render", "--checkpoint", p(&out), "--input", p(&wav), "--samples", "10", "--out", p(&same)]);
    assert_eq!(code(&res), 2);
}

#[test]
fn fit_inr_error_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.wav");
    let out = dir.path().join("x.hsnd");
    let res = run(&["fit-inr", "--input", p(&missing), "--out", p(&out)]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("nope.wav"), "{}", stderr(&res));

    let wav = dir.path().join("t.wav");
    write_tone(&wav, &[(440.0, 0.5)], 512, 8000);
    let bad = write_config(dir.path(), "bad.toml", "[fit]\nstep = 3\n");
    let res = run(&["fit-inr", "--input", p(&wav), "--config", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&res), 2, "{}", stderr(&res));

    let zero = write_config(dir.path(), "zero.toml", "[target]\nhidden_widths = [0]\n");
    let res = run(&["fit-inr", "--input", p(&wav), "--config", p(&zero), "--out", p(&out)]);
    assert_eq!(code(&res), 2, "{}", stderr(&res));

    let runaway = write_config(
        dir.path(),
        "runaway.toml",
        "[target]\nkind = \"fmlp\"\nhidden_widths = [32, 32, 32]\n[fit]\nsteps = 300\nlr = 1e30\n",
    );
    let res = run(&["fit-inr", "--input", p(&wav), "--config", p(&runaway), "--out", p(&out)]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
}

#[test]
fn train_resume_render_and_export() {
    let dir = TempDir::new().unwrap();
    let data = tiny_dataset(dir.path());
    let out = dir.path().join("run");
    let cfg4 = write_config(dir.path(), "t4.toml", &tiny_train_config(4));
    let res = run(&["train-hyper", "--data", p(&data), "--config", p(&cfg4), "--out", p(&out), "--seed", "5"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(out.join("epoch_00002.hsnd").exists());
    assert!(out.join("epoch_00004.hsnd").exists());
    let latest = out.join("latest.hsnd");
    assert_eq!(load_checkpoint(&latest).unwrap().header.epoch, 4);

    // resume continues the epoch counter and appends to the history
    let cfg6 = write_config(dir.path(), "t6.toml", &tiny_train_config(6));
    let res = run(&[
        "train-hyper", "--data", p(&data), "--config", p(&cfg6), "--out", p(&out), "--resume", p(&latest), "--seed", "5",
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert_eq!(load_checkpoint(&latest).unwrap().header.epoch, 6);
    let history = read_csv(&out.join("history.csv"));
    assert_eq!(history[0].join(","), "epoch,step,lr,loss_total,loss_t,loss_f");
    let epochs: Vec<usize> = history[1..].iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(epochs.first(), Some(&0));
    assert_eq!(epochs.last(), Some(&5));
    assert!(epochs.windows(2).all(|w| w[0] <= w[1]));

    // a different architecture cannot resume this checkpoint
    let other = write_config(dir.path(), "other.toml", &tiny_train_config(6).replace("[8, 8]", "[9, 9]"));
    let res = run(&["train-hyper", "--data", p(&data), "--config", p(&other), "--out", p(&out), "--resume", p(&latest)]);
    assert_eq!(code(&res), 2, "{}", stderr(&res));

    let clip = data.join("clip0.wav");
    let rendered = dir.path().join("r.wav");
    let res = run(&["render", "--checkpoint", p(&latest), "--samples", "1024", "--out", p(&rendered)]);
    assert_eq!(code(&res), 2);
    let res = run(&["render", "--checkpoint", p(&latest), "--input", p(&clip), "--samples", "2048", "--out", p(&rendered)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let rendered = load_wav::<f32>(&rendered).unwrap();
    assert_eq!(rendered.len(), 2048);
    assert_eq!(rendered.sample_rate(), 16000);

    // two identical clips and one different one
    fs::copy(&clip, data.join("clip0_copy.wav")).unwrap();
    let csv = dir.path().join("weights.csv");
    let res = run(&["export-weights", "--checkpoint", p(&latest), "--data", p(&data), "--out", p(&csv)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# layout: "));
    let rows = read_csv(&csv);
    let param_count = 12 * 8 + 8 + 8 * 8 + 8 + 8 + 1;
    assert_eq!(rows[0].len(), param_count + 1);
    assert_eq!(rows.len(), 1 + 4);
    let by_id = |id: &str| rows.iter().find(|r| r[0] == id).unwrap()[1..].to_vec();
    assert_eq!(by_id("clip0"), by_id("clip0_copy"));
    assert_ne!(by_id("clip0"), by_id("clip1"));
    assert!(rows[1..].iter().all(|r| r.len() == param_count + 1));
}

#[test]
fn train_hyper_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let data = tiny_dataset(dir.path());
    let cfg = write_config(dir.path(), "t.toml", &tiny_train_config(3));
    let history = |name: &str| {
        let out = dir.path().join(name);
        let res = run(&["train-hyper", "--data", p(&data), "--config", p(&cfg), "--out", p(&out), "--seed", "11"]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        fs::read(out.join("history.csv")).unwrap()
    };
    assert_eq!(history("a"), history("b"));
}

#[test]
fn train_hyper_rejects_empty_dataset() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    fs::write(empty.join("notes.txt"), "not audio").unwrap();
    let res = run(&["train-hyper", "--data", p(&empty), "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&res), 2, "{}", stderr(&res));
}

#[test]
fn train_hyper_smoke_run_halves_the_loss() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    fs::create_dir_all(&data).unwrap();
    // harmonic tones with random phases over a light noise floor
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..32 {
        let f0 = rng.random_range(100.0..300.0);
        let parts: Vec<(f64, f64, f64)> =
            (1..=8).map(|k| (f0 * k as f64, 0.3 / k as f64, rng.random_range(0.0..2.0 * PI))).collect();
        let samples: Vec<f32> = (0..2048)
            .map(|n| {
                let t = n as f64 / 16000.0;
                let tone: f64 = parts.iter().map(|(f, a, ph)| a * (2.0 * PI * f * t + ph).sin()).sum();
                (tone + 0.01 * rng.random_range(-1.7..1.7)) as f32
            })
            .collect();
        save_wav(&AudioClip::new(samples, 16000).unwrap(), data.join(format!("c{i:02}.wav"))).unwrap();
    }
    let cfg = write_config(
        dir.path(),
        "smoke.toml",
        r#"
[target]
kind = "fmlp"
hidden_widths = [20, 20, 20, 20, 20]

[hypernet]
input_len = 2048
head_hidden = [256, 256]

[train]
epochs = 300
samples_per_epoch = 32

[train.augmentation]
crop_length = 2048
phase_mangle = false

[train.loss]
lambda_f = 0.03
"#,
    );
    let out = dir.path().join("smoke");
    let res = run(&["train-hyper", "--data", p(&data), "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let rows = read_csv(&out.join("history.csv"));
    let mean = |epoch: &str| {
        let v: Vec<f64> = rows[1..].iter().filter(|r| r[0] == epoch).map(|r| r[3].parse().unwrap()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (first, last) = (mean("0"), mean("299"));
    assert!(last < 0.5 * first, "{first} -> {last}");
}

#[test]
fn eval_identity_silence_and_mismatch() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.wav");
    write_tone(&a, &[(300.0, 0.5), (1200.0, 0.2)], 4096, 16000);
    let out = dir.path().join("m/eval.csv");
    let res = run(&["eval", "--ref", p(&a), "--est", p(&a), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let rows = read_csv(&out);
    assert_eq!(rows[0].join(","), "clip_id,mse,lsd,si_snr");
    assert_eq!(rows[1][0], "a");
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][3].parse::<f64>().unwrap(), 100.0);

    let silent = dir.path().join("silent.wav");
    save_wav(&AudioClip::new(vec![0.0f32; 4096], 16000).unwrap(), &silent).unwrap();
    let res = run(&["eval", "--ref", p(&silent), "--est", p(&a), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(stderr(&res).contains("undefined"));
    assert_eq!(read_csv(&out)[1][3], "undefined");

    let short = dir.path().join("short.wav");
    write_tone(&short, &[(300.0, 0.5)], 4000, 16000);
    let res = run(&["eval", "--ref", p(&a), "--est", p(&short), "--out", p(&out)]);
    assert_eq!(code(&res), 2);
}
