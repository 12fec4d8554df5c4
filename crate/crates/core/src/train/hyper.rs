use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Adam, AdamConfig};
use super::schedule::{one_cycle_lr, OneCycle};
use crate::diff::Tensor;
use crate::dsp::{LossConfig, SpectralLoss};
use crate::error::{Error, Result};
use crate::hypernet::{load_checkpoint, save_checkpoint, Checkpoint, Hypernetwork, HypernetworkSpec};
use crate::inr::TargetKind;
use crate::scalar::Scalar;
use crate::signal::{augment, make_grid, AugmentationConfig, AudioClip};

/// How the hypernetwork parameters are initialised for a fresh run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperInit {
    /// `init_for_fmlp` or `init_for_siren`, according to the target kind.
    Specialized,
    /// Plain fan-in scaled uniform initialisation.
    Default,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Augmented crops drawn (with replacement) per epoch.
    pub samples_per_epoch: usize,
    pub max_lr: f64,
    /// Multiplies `max_lr`; a per-dataset reduction knob.
    pub lr_scale: f64,
    pub schedule: OneCycle,
    pub adam: AdamConfig,
    pub seed: u64,
    pub init: HyperInit,
    pub loss: LossConfig,
    pub augmentation: AugmentationConfig,
    /// Write a checkpoint every this many epochs (0 disables periodic checkpoints).
    pub checkpoint_every: usize,
    /// Abort when a step's loss exceeds this multiple of the first step's loss.
    pub divergence_factor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            epochs: 2500,
            samples_per_epoch: 10000,
            max_lr: 1e-4,
            lr_scale: 1.0,
            schedule: OneCycle::default(),
            adam: AdamConfig::adamw(),
            seed: 0,
            init: HyperInit::Specialized,
            loss: LossConfig::default(),
            augmentation: AugmentationConfig::default(),
            checkpoint_every: 100,
            divergence_factor: 1e3,
        }
    }
}

impl TrainConfig {
    /// Peak learning rate used for each target kind by default.
    pub fn default_max_lr(kind: TargetKind) -> f64 {
        match kind {
            TargetKind::Fmlp => 1e-4,
            TargetKind::Siren => 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 || self.epochs == 0 || self.samples_per_epoch == 0 {
            return bad("batch_size, epochs and samples_per_epoch must be positive".into());
        }
        if !(self.max_lr > 0.0 && self.max_lr.is_finite() && self.lr_scale > 0.0) {
            return bad(format!("max_lr and lr_scale must be positive ({}, {})", self.max_lr, self.lr_scale));
        }
        if self.divergence_factor.is_nan() || self.divergence_factor <= 1.0 {
            return bad("divergence_factor must exceed 1".into());
        }
        self.schedule.validate()?;
        self.adam.validate()?;
        self.loss.validate()?;
        self.augmentation.validate()
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.samples_per_epoch.div_ceil(self.batch_size)
    }

    pub fn total_steps(&self) -> usize {
        self.epochs * self.steps_per_epoch()
    }
}

/// One optimisation step of the training history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub loss_total: f64,
    pub loss_t: f64,
    pub loss_f: f64,
}

pub const HISTORY_CSV_HEADER: &str = "epoch,step,lr,loss_total,loss_t,loss_f";

pub fn write_history_csv<W: Write>(out: &mut W, rows: &[HistoryRow], header: bool) -> Result<()> {
    if header {
        writeln!(out, "{HISTORY_CSV_HEADER}")?;
    }
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.epoch, r.step, r.lr, r.loss_total, r.loss_t, r.loss_f)?;
    }
    Ok(())
}

/// Mean total loss of each epoch present in `rows`, in epoch order.
pub fn epoch_means(rows: &[HistoryRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64, usize)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((e, sum, n)) if *e == r.epoch => {
                *sum += r.loss_total;
                *n += 1;
            }
            _ => out.push((r.epoch, r.loss_total, 1)),
        }
    }
    out.into_iter().map(|(e, sum, n)| (e, sum / n as f64)).collect()
}

/// Everything needed to continue training: parameters, optimizer moments and counters.
#[derive(Clone, Debug)]
pub struct TrainState<S> {
    pub hypernet: Hypernetwork<S>,
    pub optimizer: Adam<S>,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimisation steps.
    pub step: usize,
    pub seed: u64,
    /// Loss of the very first step, the reference for the divergence guard.
    pub initial_loss: Option<f64>,
    pub sample_rate: u32,
}

impl<S: Scalar> TrainState<S> {
    /// Fresh state with the initialisation selected by `cfg.init`.
    pub fn new(spec: HypernetworkSpec, cfg: &TrainConfig, sample_rate: u32) -> Result<Self> {
        let mut hypernet = Hypernetwork::new(spec, cfg.seed)?;
        if cfg.init == HyperInit::Specialized {
            match hypernet.spec().target.kind {
                TargetKind::Fmlp => hypernet.init_for_fmlp(cfg.seed)?,
                TargetKind::Siren => hypernet.init_for_siren(cfg.seed)?,
            }
        }
        Ok(Self {
            hypernet,
            optimizer: Adam::new(cfg.adam),
            epoch: 0,
            step: 0,
            seed: cfg.seed,
            initial_loss: None,
            sample_rate,
        })
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut ckpt = self.hypernet.to_checkpoint(self.sample_rate)?;
        ckpt.header.epoch = self.epoch;
        ckpt.header.step = self.step;
        ckpt.header.seed = self.seed;
        ckpt.header.extra = serde_json::json!({
            "adam": self.optimizer.config(),
            "adam_steps": self.optimizer.steps(),
            "initial_loss": self.initial_loss,
        });
        let names: Vec<(String, Vec<usize>)> =
            self.hypernet.params().iter().map(|(n, p)| (n.to_string(), p.shape().to_vec())).collect();
        for (i, (name, shape)) in names.into_iter().enumerate() {
            if let Some((m, v)) = self.optimizer.moments(i) {
                ckpt.push_tensor(format!("adam.m.{name}"), shape.clone(), m)?;
                ckpt.push_tensor(format!("adam.v.{name}"), shape, v)?;
            }
        }
        Ok(ckpt)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let hypernet = Hypernetwork::from_checkpoint(ckpt)?;
        let extra = &ckpt.header.extra;
        let corrupt = |m: &str| Error::CorruptCheckpoint(m.to_string());
        let adam_cfg: AdamConfig = match extra.get("adam") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|_| corrupt("unreadable optimizer settings"))?,
            None => AdamConfig::adamw(),
        };
        let steps = extra.get("adam_steps").and_then(|v| v.as_u64()).unwrap_or(0);
        let mut moments = Vec::new();
        for name in hypernet.params().names() {
            let m = ckpt.tensor(&format!("adam.m.{name}"));
            let v = ckpt.tensor(&format!("adam.v.{name}"));
            match (m, v) {
                (Some((_, m)), Some((_, v))) => moments.push((
                    m.iter().map(|&x| S::cast(x as f64)).collect(),
                    v.iter().map(|&x| S::cast(x as f64)).collect(),
                )),
                (None, None) => break,
                _ => return Err(corrupt("incomplete optimizer moments")),
            }
        }
        let initial_loss = extra.get("initial_loss").and_then(|v| v.as_f64());
        Ok(Self {
            hypernet,
            optimizer: Adam::restore(adam_cfg, steps, moments)?,
            epoch: ckpt.header.epoch,
            step: ckpt.header.step,
            seed: ckpt.header.seed,
            initial_loss,
            sample_rate: ckpt.header.sample_rate,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_checkpoint(path, &self.to_checkpoint()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&load_checkpoint(path)?)
    }
}

/// Where and how long a call to [`train_hypernetwork`] runs.
#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Directory for periodic and divergence checkpoints; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    /// Stop after this many epochs of the current call (the schedule still spans `cfg.epochs`).
    pub max_epochs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<S> {
    pub state: TrainState<S>,
    /// Rows produced by this call.
    pub history: Vec<HistoryRow>,
}

pub const LATEST_CHECKPOINT: &str = "latest.hsnd";
pub const LAST_GOOD_CHECKPOINT: &str = "last_good.hsnd";

pub fn epoch_checkpoint_name(epoch: usize) -> String {
    format!("epoch_{epoch:05}.hsnd")
}

/// Runs hypernetwork training from `state` until `cfg.epochs` epochs are complete.
///
/// Each step draws a batch of clips, augments them, generates θ per clip, renders the
/// target network on the clip grid and minimises the combined time/frequency loss with
/// frequency weights annealed by epoch. Batches depend only on `(seed, step)`, so a
/// resumed run continues exactly as an uninterrupted one would.
///
/// A non-finite loss, or one above `divergence_factor ×` the first loss, aborts with
/// [`Error::Divergence`] after saving the last good parameters to `last_good.hsnd`.
pub fn train_hypernetwork<S: Scalar>(
    dataset: &[AudioClip<S>],
    mut state: TrainState<S>,
    cfg: &TrainConfig,
    opts: &TrainOptions,
) -> Result<TrainOutcome<S>> {
    cfg.validate()?;
    let spec = state.hypernet.spec().clone();
    let input_len = spec.input_len;
    check_dataset(dataset, input_len, cfg, state.sample_rate)?;
    let loss = SpectralLoss::<S>::new(&cfg.loss, state.sample_rate)?;
    let target = state.hypernet.target().clone();
    let features = target.features(make_grid::<S>(input_len)?.coords())?;
    let steps_per_epoch = cfg.steps_per_epoch();
    let total_steps = cfg.total_steps();
    let max_lr = cfg.max_lr * cfg.lr_scale;
    let p = target.param_count();
    let stop_epoch = opts.max_epochs.map_or(cfg.epochs, |n| (state.epoch + n).min(cfg.epochs));
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut history = Vec::new();
    while state.epoch < stop_epoch {
        let epoch = state.epoch;
        for k in 0..steps_per_epoch {
            let batch_size = cfg.batch_size.min(cfg.samples_per_epoch - k * cfg.batch_size);
            let step = state.step;
            let clips = draw_batch(dataset, cfg, state.seed, step, batch_size)?;
            let hyper = &mut state.hypernet;
            let trace = hyper.forward_traced(&clips)?;
            let shared = hyper.shared().map(<[S]>::to_vec);
            let mut d_theta = vec![S::zero(); batch_size * p];
            let mut d_shared = shared.as_ref().map(|s| vec![S::zero(); s.len()]);
            let (mut total, mut time, mut freq) = (0.0, 0.0, 0.0);
            let scale = S::one() / S::count(batch_size);
            for (b, (theta, x)) in trace.theta().chunks_exact(p).zip(clips.data().chunks_exact(input_len)).enumerate() {
                let t = target.forward_traced(theta, shared.as_deref(), &features)?;
                let (parts, mut grad) = loss.total_loss_with_grad(x, t.output(), epoch)?;
                total += parts.total.as_f64();
                time += parts.time.as_f64();
                freq += parts.freq.as_f64();
                grad.iter_mut().for_each(|g| *g *= scale);
                let g = target.backward(theta, shared.as_deref(), &t, &grad)?;
                d_theta[b * p..(b + 1) * p].copy_from_slice(&g.instance);
                if let Some(ds) = d_shared.as_mut() {
                    ds.iter_mut().zip(&g.shared).for_each(|(a, &v)| *a += v);
                }
            }
            let n = batch_size as f64;
            let (total, time, freq) = (total / n, time / n, freq / n);
            let reference = *state.initial_loss.get_or_insert(total);
            if !total.is_finite() || total > cfg.divergence_factor * reference {
                if let Some(dir) = &opts.out_dir {
                    state.save(dir.join(LAST_GOOD_CHECKPOINT))?;
                }
                let reason = if total.is_finite() {
                    format!("loss {total} exceeds {} × the initial loss {reference}", cfg.divergence_factor)
                } else {
                    format!("loss became {total}")
                };
                return Err(Error::Divergence { step, reason });
            }
            let hyper = &mut state.hypernet;
            hyper.params_mut().zero_grad();
            hyper.backward(&trace, &d_theta, d_shared.as_deref())?;
            let lr = one_cycle_lr(step, total_steps, max_lr, &cfg.schedule);
            state.optimizer.step_store(state.hypernet.params_mut(), lr)?;
            state.step += 1;
            history.push(HistoryRow { epoch, step, lr, loss_total: total, loss_t: time, loss_f: freq });
        }
        state.epoch += 1;
        if let Some(dir) = &opts.out_dir {
            let periodic = cfg.checkpoint_every > 0 && state.epoch.is_multiple_of(cfg.checkpoint_every);
            if periodic || state.epoch == stop_epoch {
                let ckpt = state.to_checkpoint()?;
                if periodic {
                    save_checkpoint(dir.join(epoch_checkpoint_name(state.epoch)), &ckpt)?;
                }
                save_checkpoint(dir.join(LATEST_CHECKPOINT), &ckpt)?;
            }
        }
    }
    Ok(TrainOutcome { state, history })
}

fn check_dataset<S: Scalar>(dataset: &[AudioClip<S>], input_len: usize, cfg: &TrainConfig, sample_rate: u32) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::Argument("empty training set".into()));
    }
    if cfg.augmentation.crop_length != input_len {
        return Err(Error::Config(format!(
            "augmentation crop_length {} must equal the hypernetwork input_len {input_len}",
            cfg.augmentation.crop_length
        )));
    }
    for (i, clip) in dataset.iter().enumerate() {
        if clip.len() < input_len {
            return Err(Error::Argument(format!("clip {i} has {} samples, fewer than input_len {input_len}", clip.len())));
        }
        if clip.sample_rate() != sample_rate {
            return Err(Error::Argument(format!(
                "clip {i} has sample rate {}, training runs at {sample_rate}",
                clip.sample_rate()
            )));
        }
    }
    Ok(())
}

/// Augmented batch `[batch, input_len]` for `step`; depends only on `(seed, step)`.
fn draw_batch<S: Scalar>(dataset: &[AudioClip<S>], cfg: &TrainConfig, seed: u64, step: usize, batch: usize) -> Result<Tensor<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step as u64);
    let mut data = Vec::with_capacity(batch * cfg.augmentation.crop_length);
    for _ in 0..batch {
        let clip = &dataset[rng.random_range(0..dataset.len())];
        let aug_seed: u64 = rng.random();
        data.extend_from_slice(augment(clip, &cfg.augmentation, aug_seed)?.samples());
    }
    Tensor::new(vec![batch, cfg.augmentation.crop_length], data)
}

/// `θ = generate(clip)` rendered on the clip's own grid (the first `input_len` samples are used).
pub fn reconstruct<S: Scalar>(hypernet: &Hypernetwork<S>, clip: &[S]) -> Result<Vec<S>> {
    let n = hypernet.spec().input_len;
    if clip.len() < n {
        return Err(Error::Argument(format!("clip has {} samples, the hypernetwork needs {n}", clip.len())));
    }
    let theta = hypernet.generate(&clip[..n])?;
    hypernet.target().render(theta.as_slice(), hypernet.shared(), n)
}
