use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-cycle learning-rate policy: linear warmup from `max/div_initial` to `max`,
/// then cosine decay to `max/div_final`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneCycle {
    pub pct_warmup: f64,
    pub div_initial: f64,
    pub div_final: f64,
}

impl Default for OneCycle {
    fn default() -> Self {
        Self { pct_warmup: 0.3, div_initial: 25.0, div_final: 1e4 }
    }
}

impl OneCycle {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pct_warmup) {
            return Err(Error::Config(format!("pct_warmup must lie in [0, 1], got {}", self.pct_warmup)));
        }
        if !(self.div_initial >= 1.0 && self.div_final >= 1.0) {
            return Err(Error::Config("one-cycle divisors must be at least 1".into()));
        }
        Ok(())
    }

    /// Index of the step that receives the peak rate.
    pub fn peak_step(&self, total_steps: usize) -> usize {
        let last = total_steps.saturating_sub(1);
        ((self.pct_warmup * last as f64).round() as usize).min(last)
    }

    /// Largest change between consecutive steps: the steeper of the warmup slope and the
    /// maximal cosine slope.
    pub fn max_step_change(&self, total_steps: usize, max_lr: f64) -> f64 {
        let last = total_steps.saturating_sub(1);
        let peak = self.peak_step(total_steps);
        let warm = if peak > 0 { (max_lr - max_lr / self.div_initial) / peak as f64 } else { 0.0 };
        let decay_len = last - peak;
        let cool = if decay_len > 0 { (max_lr - max_lr / self.div_final) * PI / (2.0 * decay_len as f64) } else { 0.0 };
        warm.max(cool)
    }
}

/// Learning rate at `step` of `total_steps` (steps are 0-based).
///
/// Step 0 gets `max_lr/div_initial`, the peak step gets exactly `max_lr` and the last
/// step gets `max_lr/div_final`. Steps past the end keep the final rate.
pub fn one_cycle_lr(step: usize, total_steps: usize, max_lr: f64, cfg: &OneCycle) -> f64 {
    let initial = max_lr / cfg.div_initial;
    let floor = max_lr / cfg.div_final;
    if total_steps <= 1 {
        return initial;
    }
    let last = total_steps - 1;
    let step = step.min(last);
    let peak = cfg.peak_step(total_steps);
    if step < peak {
        return initial + (max_lr - initial) * step as f64 / peak as f64;
    }
    if step == peak {
        return max_lr;
    }
    let progress = (step - peak) as f64 / (last - peak) as f64;
    floor + (max_lr - floor) * 0.5 * (1.0 + (PI * progress).cos())
}
