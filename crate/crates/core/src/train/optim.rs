use serde::{Deserialize, Serialize};

use crate::diff::ParamStore;
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

/// Adam hyperparameters. A non-zero `weight_decay` gives decoupled (AdamW) decay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

impl AdamConfig {
    pub fn adamw() -> Self {
        Self { weight_decay: 0.01, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| (0.0..1.0).contains(&b);
        if !(unit(self.beta1) && unit(self.beta2) && self.eps > 0.0 && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// Adam moments for a fixed list of tensors, addressed by position.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<S> {
    cfg: AdamConfig,
    t: u64,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(cfg: AdamConfig) -> Self {
        Self { cfg, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    /// Completed update steps.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// First and second moments of tensor `index`, if it has been updated.
    pub fn moments(&self, index: usize) -> Option<(&[S], &[S])> {
        Some((self.m.get(index)?.as_slice(), self.v.get(index)?.as_slice()))
    }

    /// Restores optimizer state saved via [`Adam::steps`] and [`Adam::moments`].
    pub fn restore(cfg: AdamConfig, t: u64, moments: Vec<(Vec<S>, Vec<S>)>) -> Result<Self> {
        if moments.iter().any(|(m, v)| m.len() != v.len()) {
            return shape_err("moment pairs differ in length");
        }
        let (m, v) = moments.into_iter().unzip();
        Ok(Self { cfg, t, m, v })
    }

    /// One update over every tensor of `store`, in store order.
    pub fn step_store(&mut self, store: &mut ParamStore<S>, lr: f64) -> Result<()> {
        self.t += 1;
        for (i, (_, p)) in store.iter_mut().enumerate() {
            let (value, grad) = p.value_and_grad_mut();
            self.update(i, lr, value, grad)?;
        }
        Ok(())
    }

    /// One update over explicit `(values, grads)` pairs.
    pub fn step_slices(&mut self, lr: f64, tensors: &mut [(&mut [S], &[S])]) -> Result<()> {
        self.t += 1;
        for (i, (value, grad)) in tensors.iter_mut().enumerate() {
            self.update(i, lr, value, grad)?;
        }
        Ok(())
    }

    fn update(&mut self, index: usize, lr: f64, value: &mut [S], grad: &[S]) -> Result<()> {
        if value.len() != grad.len() {
            return shape_err(format!("tensor {index}: {} values but {} gradients", value.len(), grad.len()));
        }
        while self.m.len() <= index {
            self.m.push(Vec::new());
            self.v.push(Vec::new());
        }
        if self.m[index].is_empty() {
            self.m[index] = vec![S::zero(); value.len()];
            self.v[index] = vec![S::zero(); value.len()];
        } else if self.m[index].len() != value.len() {
            return shape_err(format!("tensor {index} changed size since the previous step"));
        }
        let c = &self.cfg;
        let t = self.t as i32;
        let (b1, b2) = (S::cast(c.beta1), S::cast(c.beta2));
        let (one_b1, one_b2) = (S::cast(1.0 - c.beta1), S::cast(1.0 - c.beta2));
        let step = S::cast(lr / (1.0 - c.beta1.powi(t)));
        let v_corr = S::cast(1.0 / (1.0 - c.beta2.powi(t)));
        let eps = S::cast(c.eps);
        let decay = S::cast(1.0 - lr * c.weight_decay);
        let (m, v) = (&mut self.m[index], &mut self.v[index]);
        for (((p, &g), m), v) in value.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            if c.weight_decay > 0.0 {
                *p *= decay;
            }
            *p -= step * *m / ((*v * v_corr).sqrt() + eps);
        }
        Ok(())
    }
}
