use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{Checkpoint, CheckpointHeader, CheckpointKind};
use super::spec::HypernetworkSpec;
use crate::diff::kernels::{affine, affine_backward};
use crate::diff::{conv1d_strided, conv1d_strided_backward, Activation, ParamStore, Tensor};
use crate::error::{shape_err, Error, Result};
use crate::inr::{bias_bound, init_instance_weights, init_shared_weights, weight_bound, TargetNetwork, TensorRole, WeightVector};
use crate::scalar::Scalar;

const SHARED: &str = "shared";
/// Half-width of the final projection's weights under the SIREN initialisation.
const SIREN_PROJECTION_BOUND: f64 = 1e-4;
/// Random inputs used to calibrate the FMLP initialisation.
const CALIBRATION_INPUTS: usize = 64;

fn enc_kernel(i: usize) -> String {
    format!("encoder.{i}.kernel")
}

fn enc_bias(i: usize) -> String {
    format!("encoder.{i}.bias")
}

fn head_weight(j: usize) -> String {
    format!("head.{j}.weight")
}

fn head_bias(j: usize) -> String {
    format!("head.{j}.bias")
}

/// Activations of one batched forward pass, consumed by [`Hypernetwork::backward`].
#[derive(Clone, Debug)]
pub struct HyperTrace<S> {
    batch: usize,
    conv_inputs: Vec<Tensor<S>>,
    conv_pre: Vec<Tensor<S>>,
    head_inputs: Vec<Vec<S>>,
    head_pre: Vec<Vec<S>>,
    theta: Vec<S>,
}

impl<S: Scalar> HyperTrace<S> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Generated weight vectors, `[batch, param_count]` row-major.
    pub fn theta(&self) -> &[S] {
        &self.theta
    }
}

/// Hypernetwork parameters together with the target network they parameterise.
///
/// The parameter store holds `encoder.{i}.kernel/bias`, `head.{j}.weight/bias` and, when the
/// target variant needs them, the learnable `shared` target weights.
#[derive(Clone, Debug)]
pub struct Hypernetwork<S> {
    spec: HypernetworkSpec,
    params: ParamStore<S>,
    target: TargetNetwork<S>,
}

impl<S: Scalar> Hypernetwork<S> {
    /// Builds a hypernetwork with fan-in scaled uniform initialisation (`±1/√fan_in`) everywhere.
    pub fn new(spec: HypernetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let target = TargetNetwork::new(spec.target.clone())?;
        let mut net = Self { spec, params: ParamStore::new(), target };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c_in = 1;
        let kernels = net.spec.kernel_sizes();
        for (i, (&c_out, &k)) in net.spec.encoder_channels.iter().zip(&kernels).enumerate() {
            let bound = 1.0 / ((c_in * k) as f64).sqrt();
            net.params.insert(enc_kernel(i), uniform(&[c_out, c_in, k], bound, &mut rng))?;
            net.params.insert(enc_bias(i), uniform(&[c_out], bound, &mut rng))?;
            c_in = c_out;
        }
        for (j, (fan_in, fan_out)) in net.spec.head_dims().into_iter().enumerate() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            net.params.insert(head_weight(j), uniform(&[fan_out, fan_in], bound, &mut rng))?;
            net.params.insert(head_bias(j), uniform(&[fan_out], bound, &mut rng))?;
        }
        if net.target.requires_shared() {
            let shared = init_shared_weights::<S, _>(&net.spec.target, &mut rng);
            net.params.insert(SHARED, Tensor::vector(shared)?)?;
        }
        Ok(net)
    }

    /// Rebuilds a hypernetwork from a spec and a complete parameter store.
    pub fn from_params(spec: HypernetworkSpec, params: ParamStore<S>) -> Result<Self> {
        let reference = Self::new(spec, 0)?;
        if reference.params.len() != params.len() {
            return shape_err(format!("expected {} parameter tensors, got {}", reference.params.len(), params.len()));
        }
        for (name, p) in reference.params.iter() {
            let given = params.param(name)?;
            if given.shape() != p.shape() {
                return shape_err(format!("parameter {name} has shape {:?}, expected {:?}", given.shape(), p.shape()));
            }
        }
        Ok(Self { params, ..reference })
    }

    /// Initialisation for FMLP targets.
    ///
    /// Hidden layers get Kaiming-uniform weights. The final projection has zero bias and
    /// weights scaled per target tensor so that, over white-noise inputs, the generated
    /// weights have the variance of the target's Kaiming-uniform initialisation.
    pub fn init_for_fmlp(&mut self, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.reinit_hidden(&mut rng)?;
        let last = self.spec.head_dims().len() - 1;
        let (fan_in, _) = self.spec.head_dims()[last];
        // calibrate on the mean squared norm of the projection input
        let inputs = white_noise::<S>(CALIBRATION_INPUTS, self.spec.input_len, &mut rng);
        let h = self.projection_input(&inputs)?;
        let m2 = h.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>() / CALIBRATION_INPUTS as f64;
        let m2 = m2.max(f64::MIN_POSITIVE);
        let layout = self.target.instance_layout().clone();
        let spec = self.spec.target.clone();
        let w = self.params.param_mut(&head_weight(last))?.data_mut();
        for e in layout.entries() {
            let bound = match e.role {
                TensorRole::Weight => weight_bound(&spec, e.layer),
                TensorRole::Bias => bias_bound(&spec, e.layer),
            } / m2.sqrt();
            for row in e.range() {
                for v in &mut w[row * fan_in..(row + 1) * fan_in] {
                    *v = S::cast(rng.random_range(-bound..=bound));
                }
            }
        }
        self.params.param_mut(&head_bias(last))?.data_mut().fill(S::zero());
        self.reinit_shared(&mut rng)
    }

    /// Initialisation for SIREN targets.
    ///
    /// The final projection's weights are drawn from `U(-1e-4, 1e-4)` and its bias holds a
    /// SIREN-initialised weight vector, so generated θ starts close to that draw for any input.
    pub fn init_for_siren(&mut self, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.reinit_hidden(&mut rng)?;
        let last = self.spec.head_dims().len() - 1;
        for v in self.params.param_mut(&head_weight(last))?.data_mut() {
            *v = S::cast(rng.random_range(-SIREN_PROJECTION_BOUND..=SIREN_PROJECTION_BOUND));
        }
        let bias: Vec<S> = init_instance_weights(&self.spec.target, &mut rng);
        self.params.set_value(&head_bias(last), &bias)?;
        self.reinit_shared(&mut rng)
    }

    fn reinit_hidden(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let mut c_in = 1;
        let kernels = self.spec.kernel_sizes();
        for (i, (&c_out, &k)) in self.spec.encoder_channels.iter().zip(&kernels).enumerate() {
            let fan_in = c_in * k;
            fill_uniform(self.params.param_mut(&enc_kernel(i))?.data_mut(), (6.0 / fan_in as f64).sqrt(), rng);
            self.params.param_mut(&enc_bias(i))?.data_mut().fill(S::zero());
            c_in = c_out;
        }
        let dims = self.spec.head_dims();
        for (j, &(fan_in, _)) in dims.iter().enumerate().take(dims.len() - 1) {
            fill_uniform(self.params.param_mut(&head_weight(j))?.data_mut(), (6.0 / fan_in as f64).sqrt(), rng);
            self.params.param_mut(&head_bias(j))?.data_mut().fill(S::zero());
        }
        Ok(())
    }

    fn reinit_shared(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        if self.target.requires_shared() {
            let shared = init_shared_weights::<S, _>(&self.spec.target, rng);
            self.params.set_value(SHARED, &shared)?;
        }
        Ok(())
    }

    /// Checkpoint holding every parameter (as `f32`) in store order.
    pub fn to_checkpoint(&self, sample_rate: u32) -> Result<Checkpoint> {
        let header = CheckpointHeader::new(
            CheckpointKind::Hypernetwork,
            self.spec.target.clone(),
            Some(self.spec.clone()),
            sample_rate,
        );
        let mut ckpt = Checkpoint::new(header);
        for (name, p) in self.params.iter() {
            ckpt.push_tensor(name, p.shape().to_vec(), p.data())?;
        }
        Ok(ckpt)
    }

    /// Restores the parameters saved by [`Hypernetwork::to_checkpoint`]; extra tensors are ignored.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.header.kind != CheckpointKind::Hypernetwork {
            return Err(Error::CheckpointFormat("checkpoint does not hold a hypernetwork".into()));
        }
        let spec = ckpt
            .header
            .hypernet
            .clone()
            .ok_or_else(|| Error::CorruptCheckpoint("hypernetwork checkpoint without a hypernetwork spec".into()))?;
        let mut net = Self::new(spec, 0).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let names: Vec<String> = net.params.names().map(str::to_string).collect();
        for name in names {
            let (shape, data) = ckpt.require::<S>(&name)?;
            if shape != net.params.param(&name)?.shape() {
                return Err(Error::CorruptCheckpoint(format!("tensor {name} has shape {shape:?}")));
            }
            net.params.set_value(&name, &data)?;
        }
        Ok(net)
    }

    pub fn spec(&self) -> &HypernetworkSpec {
        &self.spec
    }

    pub fn target(&self) -> &TargetNetwork<S> {
        &self.target
    }

    pub fn params(&self) -> &ParamStore<S> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<S> {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore<S> {
        self.params
    }

    /// Learned shared target weights, if the variant uses them.
    pub fn shared(&self) -> Option<&[S]> {
        self.params.get(SHARED).map(|p| p.data())
    }

    /// Maps clips `[B, input_len]` to latents `[B, frames·channels]`.
    pub fn encode(&self, clips: &Tensor<S>) -> Result<Tensor<S>> {
        let (batch, _) = self.check_clips(clips)?;
        let mut x = clips.clone().reshape(vec![batch, 1, self.spec.input_len])?;
        let n = self.spec.encoder_strides.len();
        for (i, &stride) in self.spec.encoder_strides.iter().enumerate() {
            let z = conv1d_strided(&x, self.params.value(&enc_kernel(i))?, self.params.value(&enc_bias(i))?, stride)?;
            x = if i + 1 < n { z.map(|v| Activation::Elu.apply(v)) } else { z };
        }
        x.reshape(vec![batch, self.spec.latent_dim()])
    }

    /// Maps latents `[B, latent_dim]` to weight vectors `[B, param_count]`.
    pub fn head(&self, latent: &Tensor<S>) -> Result<Tensor<S>> {
        let (batch, dim) = latent.dims2()?;
        if dim != self.spec.latent_dim() {
            return shape_err(format!("latent width {dim}, head expects {}", self.spec.latent_dim()));
        }
        let dims = self.spec.head_dims();
        let mut h = latent.data().to_vec();
        for (j, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let w = self.params.value(&head_weight(j))?.data();
            let b = self.params.value(&head_bias(j))?.data();
            h = affine(&h, batch, fan_in, w, b, fan_out);
            if j + 1 < dims.len() {
                h = Activation::Elu.forward_slice(&h);
            }
        }
        Tensor::new(vec![batch, self.spec.output_dim()], h)
    }

    /// `θ = head(encode(clip))` for a single clip.
    pub fn generate(&self, clip: &[S]) -> Result<WeightVector<S>> {
        let clips = Tensor::new(vec![1, clip.len()], clip.to_vec())?;
        self.generate_batch(&clips).map(|mut v| v.remove(0))
    }

    pub fn generate_batch(&self, clips: &Tensor<S>) -> Result<Vec<WeightVector<S>>> {
        let theta = self.head(&self.encode(clips)?)?;
        let layout = self.target.instance_layout();
        theta
            .data()
            .chunks_exact(self.spec.output_dim())
            .map(|row| WeightVector::unflatten(row.to_vec(), layout.clone()))
            .collect()
    }

    /// Batched forward pass keeping everything [`Hypernetwork::backward`] needs.
    pub fn forward_traced(&self, clips: &Tensor<S>) -> Result<HyperTrace<S>> {
        let (batch, _) = self.check_clips(clips)?;
        let mut trace = HyperTrace {
            batch,
            conv_inputs: Vec::new(),
            conv_pre: Vec::new(),
            head_inputs: Vec::new(),
            head_pre: Vec::new(),
            theta: Vec::new(),
        };
        let mut x = clips.clone().reshape(vec![batch, 1, self.spec.input_len])?;
        let n = self.spec.encoder_strides.len();
        for (i, &stride) in self.spec.encoder_strides.iter().enumerate() {
            let z = conv1d_strided(&x, self.params.value(&enc_kernel(i))?, self.params.value(&enc_bias(i))?, stride)?;
            let y = if i + 1 < n { z.map(|v| Activation::Elu.apply(v)) } else { z.clone() };
            trace.conv_inputs.push(std::mem::replace(&mut x, y));
            trace.conv_pre.push(z);
        }
        let dims = self.spec.head_dims();
        let mut h = x.into_data();
        for (j, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let w = self.params.value(&head_weight(j))?.data();
            let b = self.params.value(&head_bias(j))?.data();
            let z = affine(&h, batch, fan_in, w, b, fan_out);
            if j + 1 < dims.len() {
                let y = Activation::Elu.forward_slice(&z);
                trace.head_inputs.push(std::mem::replace(&mut h, y));
                trace.head_pre.push(z);
            } else {
                trace.head_inputs.push(std::mem::take(&mut h));
                trace.theta = z;
            }
        }
        Ok(trace)
    }

    /// Accumulates parameter gradients given `d_theta` (`[B, param_count]`) and, for variants
    /// with shared weights, the gradient w.r.t. those weights.
    pub fn backward(&mut self, trace: &HyperTrace<S>, d_theta: &[S], d_shared: Option<&[S]>) -> Result<()> {
        let batch = trace.batch;
        if d_theta.len() != batch * self.spec.output_dim() {
            return shape_err(format!("θ gradient has {} values, expected {}", d_theta.len(), batch * self.spec.output_dim()));
        }
        if let Some(g) = d_shared {
            if self.params.contains(SHARED) {
                self.params.accumulate_grad(SHARED, g)?;
            }
        }
        let dims = self.spec.head_dims();
        let mut dz = d_theta.to_vec();
        for j in (0..dims.len()).rev() {
            let (fan_in, fan_out) = dims[j];
            let w = self.params.value(&head_weight(j))?.data();
            let (dx, dw, db) = affine_backward(&trace.head_inputs[j], batch, fan_in, w, fan_out, &dz, true);
            self.params.accumulate_grad(&head_weight(j), &dw)?;
            self.params.accumulate_grad(&head_bias(j), &db)?;
            let mut dx = dx.expect("requested");
            if j > 0 {
                Activation::Elu.backward_in_place(&trace.head_pre[j - 1], &mut dx);
            }
            dz = dx;
        }
        let n = self.spec.encoder_strides.len();
        let mut dy = Tensor::new(trace.conv_pre[n - 1].shape().to_vec(), dz)?;
        for i in (0..n).rev() {
            if i + 1 < n {
                Activation::Elu.backward_in_place(trace.conv_pre[i].data(), dy.data_mut());
            }
            let grads = conv1d_strided_backward(
                &trace.conv_inputs[i],
                self.params.value(&enc_kernel(i))?,
                self.params.value(&enc_bias(i))?,
                self.spec.encoder_strides[i],
                &dy,
            )?;
            self.params.accumulate_grad(&enc_kernel(i), grads.kernel.data())?;
            self.params.accumulate_grad(&enc_bias(i), grads.bias.data())?;
            dy = grads.input;
        }
        Ok(())
    }

    fn check_clips(&self, clips: &Tensor<S>) -> Result<(usize, usize)> {
        let (batch, len) = clips.dims2()?;
        if len != self.spec.input_len {
            return shape_err(format!("clips have {len} samples, hypernetwork expects {}", self.spec.input_len));
        }
        Ok((batch, len))
    }

    /// Input of the final projection for a batch of clips.
    fn projection_input(&self, clips: &Tensor<S>) -> Result<Vec<S>> {
        let trace = self.forward_traced(clips)?;
        Ok(trace.head_inputs.last().cloned().unwrap_or_default())
    }
}

fn uniform<S: Scalar>(shape: &[usize], bound: f64, rng: &mut ChaCha8Rng) -> Tensor<S> {
    let mut t = Tensor::zeros(shape);
    fill_uniform(t.data_mut(), bound, rng);
    t
}

fn fill_uniform<S: Scalar>(data: &mut [S], bound: f64, rng: &mut ChaCha8Rng) {
    for v in data {
        *v = S::cast(rng.random_range(-bound..=bound));
    }
}

fn white_noise<S: Scalar>(batch: usize, len: usize, rng: &mut ChaCha8Rng) -> Tensor<S> {
    let data = (0..batch * len).map(|_| S::cast(rng.random_range(-1.0..1.0))).collect();
    Tensor::new(vec![batch, len], data).expect("positive dimensions")
}
