use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use audio_inr::hypernet::{load_checkpoint, save_checkpoint, CheckpointKind, Hypernetwork};
use audio_inr::inr::write_weight_matrix;
use audio_inr::metrics::{write_metrics_csv, MetricsReport};
use audio_inr::signal::{load_wav, save_wav, AudioClip};
use audio_inr::train::{
    epoch_means, fit_individual_inr, train_hypernetwork, write_history_csv, StoredInr, TrainOptions, TrainState,
};
use audio_inr::AudioClip32;

use crate::config::RunConfig;
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::io(format!("{}: {e}", path.display()))
}

fn read_clip(path: &Path) -> CliResult<AudioClip32> {
    load_wav(path).map_err(|e| CliError::from_lib(path.display(), e))
}

fn create_parent(path: &Path) -> CliResult {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| io_err(dir, e)),
        _ => Ok(()),
    }
}

fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    create_parent(path)?;
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// `model.hsnd` + `history.csv` → `model.history.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

/// WAV files of `dir` sorted by file name.
fn wav_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let is_wav = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn fit_inr(input: &Path, config: Option<&Path>, out: &Path, seed: Option<u64>) -> CliResult {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.fit.seed = seed;
    }
    cfg.target.validate().map_err(|e| CliError::from_lib("config", e))?;
    cfg.fit.validate().map_err(|e| CliError::from_lib("config", e))?;
    let clip = read_clip(input)?;
    let fit = fit_individual_inr(&clip, &cfg.target, &cfg.fit).map_err(|e| CliError::from_lib(input.display(), e))?;

    create_parent(out)?;
    let ckpt = fit.to_checkpoint(cfg.fit.seed).map_err(|e| CliError::from_lib(out.display(), e))?;
    save_checkpoint(out, &ckpt).map_err(|e| CliError::from_lib(out.display(), e))?;

    let history_path = sibling(out, "history.csv");
    let mut history = create_file(&history_path)?;
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "step,loss")?;
        for (step, loss) in fit.losses.iter().enumerate() {
            writeln!(w, "{step},{loss}")?;
        }
        w.flush()
    };
    write(&mut history).map_err(|e| io_err(&history_path, e))?;

    let recon_path = sibling(out, "recon.wav");
    let recon = fit.render(clip.len()).map_err(|e| CliError::from_lib(out.display(), e))?;
    let recon = AudioClip::clamped(recon, clip.sample_rate()).map_err(|e| CliError::from_lib(recon_path.display(), e))?;
    save_wav(&recon, &recon_path).map_err(|e| CliError::from_lib(recon_path.display(), e))?;

    let metrics_path = sibling(out, "metrics.csv");
    let mut metrics = create_file(&metrics_path)?;
    write_metrics_csv(&mut metrics, &[(stem(input), fit.metrics)])
        .and_then(|()| metrics.flush().map_err(Into::into))
        .map_err(|e| CliError::from_lib(metrics_path.display(), e))?;

    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.3}"));
    println!(
        "fitted {} parameters in {} steps: mse {:.3e}, lsd {}, si_snr {} dB",
        fit.theta.len(),
        fit.losses.len(),
        fit.metrics.mse,
        fmt(fit.metrics.lsd),
        fmt(fit.metrics.si_snr)
    );
    Ok(())
}

pub fn train_hyper(data: &Path, config: Option<&Path>, out: &Path, resume: Option<&Path>, seed: Option<u64>) -> CliResult {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    let spec = cfg.hypernetwork_spec();
    spec.validate().map_err(|e| CliError::from_lib("config", e))?;
    cfg.train.validate().map_err(|e| CliError::from_lib("config", e))?;
    let files = wav_files(data)?;
    if files.is_empty() {
        return Err(CliError::usage(format!("{}: no .wav files to train on", data.display())));
    }
    let clips = files.iter().map(|f| read_clip(f)).collect::<CliResult<Vec<_>>>()?;
    let sample_rate = clips[0].sample_rate();

    let state = match resume {
        Some(path) => {
            let state = TrainState::<f32>::load(path).map_err(|e| CliError::from_lib(path.display(), e))?;
            if *state.hypernet.spec() != spec {
                return Err(CliError::usage(format!(
                    "{}: checkpoint was trained with a different hypernetwork configuration",
                    path.display()
                )));
            }
            state
        }
        None => TrainState::<f32>::new(spec, &cfg.train, sample_rate).map_err(|e| CliError::from_lib("config", e))?,
    };
    let start_epoch = state.epoch;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let opts = TrainOptions { out_dir: Some(out.to_path_buf()), max_epochs: None };
    let outcome =
        train_hypernetwork(&clips, state, &cfg.train, &opts).map_err(|e| CliError::from_lib(data.display(), e))?;

    let history_path = out.join("history.csv");
    let append = resume.is_some() && history_path.exists();
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(&history_path)
        .map_err(|e| io_err(&history_path, e))?;
    let mut w = BufWriter::new(file);
    write_history_csv(&mut w, &outcome.history, !append)
        .and_then(|()| w.flush().map_err(Into::into))
        .map_err(|e| CliError::from_lib(history_path.display(), e))?;

    let means = epoch_means(&outcome.history);
    match (means.first(), means.last()) {
        (Some(first), Some(last)) => println!(
            "trained epochs {}..{}: mean loss {:.4} -> {:.4}",
            start_epoch, outcome.state.epoch, first.1, last.1
        ),
        _ => println!("nothing to do: {} epochs already complete", outcome.state.epoch),
    }
    Ok(())
}

pub fn render(checkpoint: &Path, input: Option<&Path>, samples: usize, out: &Path) -> CliResult {
    let ckpt = load_checkpoint(checkpoint).map_err(|e| CliError::from_lib(checkpoint.display(), e))?;
    let lib = |e| CliError::from_lib(checkpoint.display(), e);
    let (signal, sample_rate, base_len) = match (ckpt.header.kind, input) {
        (CheckpointKind::Inr, Some(_)) => {
            return Err(CliError::usage("--input must not be given for an individual INR checkpoint"));
        }
        (CheckpointKind::Hypernetwork, None) => {
            return Err(CliError::usage("--input is required to render from a hypernetwork checkpoint"));
        }
        (CheckpointKind::Inr, None) => {
            let inr = StoredInr::<f32>::from_checkpoint(&ckpt).map_err(lib)?;
            (inr.render(samples).map_err(lib)?, inr.sample_rate, inr.num_samples)
        }
        (CheckpointKind::Hypernetwork, Some(input)) => {
            let net = Hypernetwork::<f32>::from_checkpoint(&ckpt).map_err(lib)?;
            let clip = read_clip(input)?;
            let n = net.spec().input_len;
            if clip.len() < n {
                return Err(CliError::usage(format!(
                    "{}: {} samples, the hypernetwork needs {n}",
                    input.display(),
                    clip.len()
                )));
            }
            let theta = net.generate(&clip.samples()[..n]).map_err(lib)?;
            let y = net.target().render(theta.as_slice(), net.shared(), samples).map_err(lib)?;
            (y, clip.sample_rate(), n)
        }
    };
    // keeps the original duration
    let rate = if base_len > 0 {
        ((sample_rate as f64 * samples as f64 / base_len as f64).round() as u32).max(1)
    } else {
        sample_rate
    };
    let clip = AudioClip::clamped(signal, rate).map_err(|e| CliError::from_lib(out.display(), e))?;
    create_parent(out)?;
    save_wav(&clip, out).map_err(|e| CliError::from_lib(out.display(), e))
}

pub fn eval(reference: &Path, est: &Path, out: &Path) -> CliResult {
    let x = read_clip(reference)?;
    let y = read_clip(est)?;
    if x.len() != y.len() {
        return Err(CliError::usage(format!(
            "{} has {} samples but {} has {}",
            reference.display(),
            x.len(),
            est.display(),
            y.len()
        )));
    }
    let report = MetricsReport::compute(x.samples(), y.samples()).map_err(|e| CliError::from_lib(est.display(), e))?;
    if report.si_snr.is_none() {
        eprintln!("warning: {} is silent, SI-SNR is undefined", reference.display());
    }
    if report.lsd.is_none() {
        eprintln!("warning: clips are shorter than one LSD frame, LSD is undefined");
    }
    let mut w = create_file(out)?;
    write_metrics_csv(&mut w, &[(stem(est), report)])
        .and_then(|()| w.flush().map_err(Into::into))
        .map_err(|e| CliError::from_lib(out.display(), e))
}

pub fn export_weights(checkpoint: &Path, data: &Path, out: &Path) -> CliResult {
    let ckpt = load_checkpoint(checkpoint).map_err(|e| CliError::from_lib(checkpoint.display(), e))?;
    if ckpt.header.kind != CheckpointKind::Hypernetwork {
        return Err(CliError::usage(format!("{}: not a hypernetwork checkpoint", checkpoint.display())));
    }
    let net = Hypernetwork::<f32>::from_checkpoint(&ckpt).map_err(|e| CliError::from_lib(checkpoint.display(), e))?;
    let n = net.spec().input_len;
    let mut rows = Vec::new();
    for file in wav_files(data)? {
        let clip = read_clip(&file)?;
        if clip.len() < n {
            return Err(CliError::usage(format!("{}: {} samples, the hypernetwork needs {n}", file.display(), clip.len())));
        }
        let theta = net.generate(&clip.samples()[..n]).map_err(|e| CliError::from_lib(file.display(), e))?;
        rows.push((stem(&file), theta.into_flat()));
    }
    let mut w = create_file(out)?;
    write_weight_matrix(&mut w, net.target().instance_layout(), &rows)
        .and_then(|()| w.flush().map_err(Into::into))
        .map_err(|e| CliError::from_lib(out.display(), e))?;
    println!("exported {} weight vectors of length {}", rows.len(), net.target().param_count());
    Ok(())
}
