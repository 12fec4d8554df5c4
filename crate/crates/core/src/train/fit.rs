use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Adam, AdamConfig};
use super::schedule::{one_cycle_lr, OneCycle};
use crate::dsp::{mse_loss, mse_loss_grad, LossConfig, SpectralLoss};
use crate::error::{Error, Result};
use crate::hypernet::{Checkpoint, CheckpointHeader, CheckpointKind};
use crate::inr::{init_fit_weights, init_shared_weights, TargetNetwork, TargetNetworkSpec, WeightVector};
use crate::metrics::MetricsReport;
use crate::scalar::Scalar;
use crate::signal::{make_grid, AudioClip};

/// Objective minimised when fitting a single INR.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitObjective {
    /// Mean squared error on the samples.
    Mse,
    /// The combined time/frequency loss of [`SpectralLoss::total_loss`].
    Spectral,
}

/// Settings for fitting one target network directly to one clip (full batch, Adam).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub steps: usize,
    pub lr: f64,
    /// One-cycle schedule peaking at `lr`; constant rate when absent.
    pub schedule: Option<OneCycle>,
    pub objective: FitObjective,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            lr: 1e-4,
            schedule: None,
            objective: FitObjective::Mse,
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        self.adam.validate()?;
        if self.objective == FitObjective::Spectral {
            self.loss.validate()?;
        }
        Ok(())
    }

    fn lr_at(&self, step: usize) -> f64 {
        match &self.schedule {
            Some(s) => one_cycle_lr(step, self.steps, self.lr, s),
            None => self.lr,
        }
    }
}

/// Outcome of [`fit_individual_inr`].
#[derive(Clone, Debug)]
pub struct FitResult<S> {
    pub spec: TargetNetworkSpec,
    pub theta: WeightVector<S>,
    pub shared: Option<WeightVector<S>>,
    /// Objective value before each update.
    pub losses: Vec<f64>,
    /// Metrics of the final rendering against the clip.
    pub metrics: MetricsReport,
    pub sample_rate: u32,
    pub num_samples: usize,
}

impl<S: Scalar> FitResult<S> {
    /// Renders the fitted network on `len` grid points.
    pub fn render(&self, len: usize) -> Result<Vec<S>> {
        let net = TargetNetwork::new(self.spec.clone())?;
        net.render(self.theta.as_slice(), self.shared.as_ref().map(|s| s.as_slice()), len)
    }

    pub fn to_checkpoint(&self, seed: u64) -> Result<Checkpoint> {
        let mut header = CheckpointHeader::new(CheckpointKind::Inr, self.spec.clone(), None, self.sample_rate);
        header.seed = seed;
        header.step = self.losses.len();
        header.extra = serde_json::json!({ "num_samples": self.num_samples });
        let mut ckpt = Checkpoint::new(header);
        ckpt.push_tensor("theta", vec![self.theta.len()], self.theta.as_slice())?;
        if let Some(s) = &self.shared {
            ckpt.push_tensor("shared", vec![s.len()], s.as_slice())?;
        }
        Ok(ckpt)
    }
}

/// A fitted INR restored from a checkpoint.
#[derive(Clone, Debug)]
pub struct StoredInr<S> {
    pub network: TargetNetwork<S>,
    pub theta: Vec<S>,
    pub shared: Option<Vec<S>>,
    pub sample_rate: u32,
    pub num_samples: usize,
}

impl<S: Scalar> StoredInr<S> {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.header.kind != CheckpointKind::Inr {
            return Err(Error::CheckpointFormat("checkpoint does not hold an individual INR".into()));
        }
        let network = TargetNetwork::new(ckpt.header.target.clone()).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let (_, theta) = ckpt.require::<S>("theta")?;
        let shared = if network.requires_shared() { Some(ckpt.require::<S>("shared")?.1) } else { None };
        if theta.len() != network.param_count() {
            return Err(Error::CorruptCheckpoint(format!("θ has {} values, spec needs {}", theta.len(), network.param_count())));
        }
        let num_samples = ckpt.header.extra.get("num_samples").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
        Ok(Self { network, theta, shared, sample_rate: ckpt.header.sample_rate, num_samples })
    }

    pub fn render(&self, len: usize) -> Result<Vec<S>> {
        self.network.render(&self.theta, self.shared.as_deref(), len)
    }
}

/// Fits a target network to `clip` by full-batch Adam on its weights.
///
/// Deterministic given `cfg.seed`. A non-finite objective aborts with [`Error::Divergence`].
pub fn fit_individual_inr<S: Scalar>(clip: &AudioClip<S>, spec: &TargetNetworkSpec, cfg: &FitConfig) -> Result<FitResult<S>> {
    cfg.validate()?;
    let net = TargetNetwork::<S>::new(spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta: Vec<S> = init_fit_weights(spec, &mut rng);
    let mut shared: Vec<S> = if net.requires_shared() { init_shared_weights(spec, &mut rng) } else { Vec::new() };
    let x = clip.samples();
    let features = net.features(make_grid::<S>(x.len())?.coords())?;
    let spectral = match cfg.objective {
        FitObjective::Spectral => Some(SpectralLoss::<S>::new(&cfg.loss, clip.sample_rate())?),
        FitObjective::Mse => None,
    };
    let mut adam = Adam::new(cfg.adam);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let shared_ref = net.requires_shared().then_some(shared.as_slice());
        let trace = net.forward_traced(&theta, shared_ref, &features)?;
        let xhat = trace.output();
        let (loss, grad) = match &spectral {
            Some(l) => {
                let (b, g) = l.total_loss_with_grad(x, xhat, step)?;
                (b.total, g)
            }
            None => (mse_loss(x, xhat)?, mse_loss_grad(x, xhat)?),
        };
        let loss = loss.as_f64();
        if !loss.is_finite() {
            return Err(Error::Divergence { step, reason: format!("objective became {loss}") });
        }
        losses.push(loss);
        let grads = net.backward(&theta, shared_ref, &trace, &grad)?;
        let lr = cfg.lr_at(step);
        if net.requires_shared() {
            adam.step_slices(lr, &mut [(&mut theta, &grads.instance), (&mut shared, &grads.shared)])?;
        } else {
            adam.step_slices(lr, &mut [(&mut theta, &grads.instance)])?;
        }
    }
    let shared_ref = net.requires_shared().then_some(shared.as_slice());
    let xhat = net.forward_features(&theta, shared_ref, &features)?;
    let metrics = MetricsReport::compute(x, &xhat)?;
    let theta = WeightVector::unflatten(theta, net.instance_layout().clone())?;
    let shared = if net.requires_shared() {
        Some(WeightVector::unflatten(shared, net.shared_layout().clone())?)
    } else {
        None
    };
    Ok(FitResult { spec: spec.clone(), theta, shared, losses, metrics, sample_rate: clip.sample_rate(), num_samples: x.len() })
}
