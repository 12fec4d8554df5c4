use std::borrow::Cow;
use std::marker::PhantomData;

use super::encoding::positional_encoding;
use super::layout::{TensorRole, WeightLayout};
use super::spec::{TargetKind, TargetNetworkSpec, Variant};
use crate::diff::kernels::{affine, affine_backward};
use crate::diff::{Activation, Tensor};
use crate::error::{arg_err, shape_err, Result};
use crate::scalar::Scalar;
use crate::signal::{make_grid, CoordinateGrid};

/// Intermediate values of one forward pass, needed by [`TargetNetwork::backward`].
#[derive(Clone, Debug)]
pub struct ForwardTrace<S> {
    rows: usize,
    /// Input of each dense layer (`inputs[0]` are the features).
    inputs: Vec<Vec<S>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Vec<S>>,
    output: Vec<S>,
}

impl<S: Scalar> ForwardTrace<S> {
    pub fn output(&self) -> &[S] {
        &self.output
    }

    pub fn into_output(self) -> Vec<S> {
        self.output
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Gradients with respect to θ and to the shared weights (empty when unused).
#[derive(Clone, Debug, PartialEq)]
pub struct TargetGrads<S> {
    pub instance: Vec<S>,
    pub shared: Vec<S>,
}

/// Forward and backward evaluation of a target network for a given [`TargetNetworkSpec`].
///
/// The network owns no weights; θ and the shared weights are passed as flat slices laid out
/// according to [`TargetNetwork::instance_layout`] and [`TargetNetwork::shared_layout`].
#[derive(Clone, Debug)]
pub struct TargetNetwork<S> {
    spec: TargetNetworkSpec,
    instance: WeightLayout,
    shared: WeightLayout,
    activations: Vec<Activation>,
    _scalar: PhantomData<S>,
}

impl<S: Scalar> TargetNetwork<S> {
    pub fn new(spec: TargetNetworkSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.num_layers();
        let activations = (0..n)
            .map(|l| match (spec.kind, l) {
                (_, l) if l + 1 == n => Activation::Identity,
                (TargetKind::Fmlp, _) => Activation::Relu,
                (TargetKind::Siren, 0) => Activation::Sin { omega: spec.omega_0 },
                (TargetKind::Siren, _) => Activation::Sin { omega: spec.omega_i },
            })
            .collect();
        Ok(Self {
            instance: spec.instance_layout(),
            shared: spec.shared_layout(),
            spec,
            activations,
            _scalar: PhantomData,
        })
    }

    pub fn spec(&self) -> &TargetNetworkSpec {
        &self.spec
    }

    pub fn instance_layout(&self) -> &WeightLayout {
        &self.instance
    }

    pub fn shared_layout(&self) -> &WeightLayout {
        &self.shared
    }

    pub fn param_count(&self) -> usize {
        self.instance.total()
    }

    pub fn shared_param_count(&self) -> usize {
        self.shared.total()
    }

    pub fn requires_shared(&self) -> bool {
        !self.shared.is_empty()
    }

    /// Network input for each coordinate: the positional encoding (FMLP) or the raw coordinate (SIREN).
    pub fn features(&self, coords: &[S]) -> Result<Tensor<S>> {
        match self.spec.kind {
            TargetKind::Fmlp => positional_encoding(coords, self.spec.embedding_l),
            TargetKind::Siren => {
                if coords.is_empty() {
                    return arg_err("no coordinates");
                }
                Tensor::new(vec![coords.len(), 1], coords.to_vec())
            }
        }
    }

    /// Evaluates the network at every grid coordinate.
    pub fn forward(&self, theta: &[S], shared: Option<&[S]>, grid: &CoordinateGrid<S>) -> Result<Vec<S>> {
        let features = self.features(grid.coords())?;
        self.forward_features(theta, shared, &features)
    }

    /// Renders `len` samples on the standard grid.
    pub fn render(&self, theta: &[S], shared: Option<&[S]>, len: usize) -> Result<Vec<S>> {
        self.forward(theta, shared, &make_grid(len)?)
    }

    pub fn forward_features(&self, theta: &[S], shared: Option<&[S]>, features: &Tensor<S>) -> Result<Vec<S>> {
        Ok(self.run(theta, shared, features, false)?.output)
    }

    /// Forward pass that keeps the activations required for [`TargetNetwork::backward`].
    pub fn forward_traced(&self, theta: &[S], shared: Option<&[S]>, features: &Tensor<S>) -> Result<ForwardTrace<S>> {
        self.run(theta, shared, features, true)
    }

    fn run(&self, theta: &[S], shared: Option<&[S]>, features: &Tensor<S>, keep: bool) -> Result<ForwardTrace<S>> {
        let shared = self.check_weights(theta, shared)?;
        let (rows, width) = features.dims2()?;
        if width != self.spec.input_width() {
            return shape_err(format!("features have width {width}, network expects {}", self.spec.input_width()));
        }
        let mut trace = ForwardTrace { rows, inputs: Vec::new(), pre: Vec::new(), output: Vec::new() };
        let mut x = features.data().to_vec();
        for (l, act) in self.activations.iter().enumerate() {
            let (fan_in, fan_out) = self.spec.layer_dims(l);
            let w = self.effective(l, TensorRole::Weight, theta, shared);
            let b = self.effective(l, TensorRole::Bias, theta, shared);
            let z = affine(&x, rows, fan_in, &w, &b, fan_out);
            let y = act.forward_slice(&z);
            if keep {
                trace.inputs.push(std::mem::replace(&mut x, y));
                if l + 1 < self.activations.len() {
                    trace.pre.push(z);
                }
            } else {
                x = y;
            }
        }
        trace.output = x;
        Ok(trace)
    }

    /// Gradients of a scalar objective given `d_out = ∂objective/∂output`.
    pub fn backward(
        &self,
        theta: &[S],
        shared: Option<&[S]>,
        trace: &ForwardTrace<S>,
        d_out: &[S],
    ) -> Result<TargetGrads<S>> {
        let shared = self.check_weights(theta, shared)?;
        if trace.inputs.len() != self.spec.num_layers() {
            return arg_err("trace was not recorded with forward_traced");
        }
        if d_out.len() != trace.rows {
            return shape_err(format!("output gradient has {} values, expected {}", d_out.len(), trace.rows));
        }
        let mut grads = TargetGrads { instance: vec![S::zero(); self.instance.total()], shared: vec![S::zero(); self.shared.total()] };
        let mut dz = d_out.to_vec();
        for l in (0..self.spec.num_layers()).rev() {
            let (fan_in, fan_out) = self.spec.layer_dims(l);
            let w = self.effective(l, TensorRole::Weight, theta, shared);
            let (dx, dw, db) = affine_backward(&trace.inputs[l], trace.rows, fan_in, &w, fan_out, &dz, l > 0);
            self.distribute(l, TensorRole::Weight, &dw, theta, shared, &mut grads);
            self.distribute(l, TensorRole::Bias, &db, theta, shared, &mut grads);
            if let Some(mut dx) = dx {
                self.activations[l - 1].backward_in_place(&trace.pre[l - 1], &mut dx);
                dz = dx;
            }
        }
        Ok(grads)
    }

    fn check_weights<'a>(&self, theta: &[S], shared: Option<&'a [S]>) -> Result<&'a [S]> {
        if theta.len() != self.instance.total() {
            return shape_err(format!("θ has {} values, network needs {}", theta.len(), self.instance.total()));
        }
        match shared {
            None if self.requires_shared() => arg_err(format!("{:?} variant needs shared weights", self.spec.variant)),
            None => Ok(&[]),
            Some(s) if s.len() != self.shared.total() => {
                shape_err(format!("shared weights have {} values, expected {}", s.len(), self.shared.total()))
            }
            Some(s) => Ok(s),
        }
    }

    fn effective<'a>(&self, layer: usize, role: TensorRole, theta: &'a [S], shared: &'a [S]) -> Cow<'a, [S]> {
        let h = self.instance.find(layer, role).map(|e| &theta[e.range()]);
        let s = self.shared.find(layer, role).map(|e| &shared[e.range()]);
        match (self.spec.variant, h, s) {
            (Variant::Residual, Some(h), Some(s)) => Cow::Owned(h.iter().zip(s).map(|(&a, &b)| a + b).collect()),
            (Variant::Modulated, Some(h), Some(s)) => Cow::Owned(h.iter().zip(s).map(|(&a, &b)| a * b).collect()),
            (_, Some(h), _) => Cow::Borrowed(h),
            (_, None, Some(s)) => Cow::Borrowed(s),
            (_, None, None) => unreachable!("layer {layer} has no weights"),
        }
    }

    fn distribute(&self, layer: usize, role: TensorRole, g: &[S], theta: &[S], shared: &[S], grads: &mut TargetGrads<S>) {
        let h = self.instance.find(layer, role).map(|e| e.range());
        let s = self.shared.find(layer, role).map(|e| e.range());
        let modulated = self.spec.variant == Variant::Modulated;
        if let Some(r) = h.clone() {
            let out = &mut grads.instance[r];
            match &s {
                Some(sr) if modulated => {
                    for ((o, &gi), &si) in out.iter_mut().zip(g).zip(&shared[sr.clone()]) {
                        *o = gi * si;
                    }
                }
                _ => out.copy_from_slice(g),
            }
        }
        if let Some(r) = s {
            let out = &mut grads.shared[r];
            match &h {
                Some(hr) if modulated => {
                    for ((o, &gi), &hi) in out.iter_mut().zip(g).zip(&theta[hr.clone()]) {
                        *o = gi * hi;
                    }
                }
                _ => out.copy_from_slice(g),
            }
        }
    }
}
