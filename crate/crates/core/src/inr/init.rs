use rand::Rng;

use super::layout::{LayoutEntry, TensorRole, WeightLayout};
use super::spec::{TargetKind, TargetNetworkSpec, Variant};
use crate::scalar::Scalar;

/// Half-width of the uniform initialisation range of layer `layer`'s weight matrix.
///
/// FMLP uses Kaiming-uniform bounds `√(6/fan_in)` (variance `2/fan_in`). SIREN uses
/// `1/fan_in` on the first layer and `√(6/fan_in)/ω_i` afterwards.
pub fn weight_bound(spec: &TargetNetworkSpec, layer: usize) -> f64 {
    let fan_in = spec.layer_dims(layer).0 as f64;
    match (spec.kind, layer) {
        (TargetKind::Fmlp, _) => (6.0 / fan_in).sqrt(),
        (TargetKind::Siren, 0) => 1.0 / fan_in,
        (TargetKind::Siren, _) => (6.0 / fan_in).sqrt() / spec.omega_i,
    }
}

/// Half-width of the uniform initialisation range of layer `layer`'s bias, `1/√fan_in`.
pub fn bias_bound(spec: &TargetNetworkSpec, layer: usize) -> f64 {
    1.0 / (spec.layer_dims(layer).0 as f64).sqrt()
}

fn draw<S: Scalar, R: Rng + ?Sized>(spec: &TargetNetworkSpec, layout: &WeightLayout, rng: &mut R) -> Vec<S> {
    draw_with(layout, rng, |e| match e.role {
        TensorRole::Weight => weight_bound(spec, e.layer),
        TensorRole::Bias => bias_bound(spec, e.layer),
    })
}

fn draw_with<S: Scalar, R: Rng + ?Sized>(layout: &WeightLayout, rng: &mut R, bound: impl Fn(&LayoutEntry) -> f64) -> Vec<S> {
    let mut out = Vec::with_capacity(layout.total());
    for e in layout.entries() {
        let bound = bound(e);
        out.extend((0..e.len()).map(|_| S::cast(rng.random_range(-bound..=bound))));
    }
    out
}

/// Random θ for fitting a single target network directly.
pub fn init_instance_weights<S: Scalar, R: Rng + ?Sized>(spec: &TargetNetworkSpec, rng: &mut R) -> Vec<S> {
    draw(spec, &spec.instance_layout(), rng)
}

/// Starting point for fitting one network directly to one clip.
///
/// SIREN uses its reference initialisation; FMLP uses `U(±1/√fan_in)` for weights and
/// biases, which starts from a near-silent output.
pub fn init_fit_weights<S: Scalar, R: Rng + ?Sized>(spec: &TargetNetworkSpec, rng: &mut R) -> Vec<S> {
    match spec.kind {
        TargetKind::Siren => init_instance_weights(spec, rng),
        TargetKind::Fmlp => draw_with(&spec.instance_layout(), rng, |e| bias_bound(spec, e.layer)),
    }
}

/// Initial shared weights: ones for the modulated variant (so `W = W^h` at start), random otherwise.
pub fn init_shared_weights<S: Scalar, R: Rng + ?Sized>(spec: &TargetNetworkSpec, rng: &mut R) -> Vec<S> {
    let layout = spec.shared_layout();
    match spec.variant {
        Variant::Modulated => vec![S::one(); layout.total()],
        _ => draw(spec, &layout, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_respect_bounds() {
        let spec = TargetNetworkSpec::siren(vec![16, 16], 3000.0, 30.0);
        let theta: Vec<f64> = init_instance_weights(&spec, &mut ChaCha8Rng::seed_from_u64(1));
        for e in spec.instance_layout().entries() {
            let bound = match e.role {
                TensorRole::Weight => weight_bound(&spec, e.layer),
                TensorRole::Bias => bias_bound(&spec, e.layer),
            };
            assert!(theta[e.range()].iter().all(|v| v.abs() <= bound));
        }
        assert_eq!(weight_bound(&spec, 0), 1.0);
        assert!((weight_bound(&spec, 1) - (6.0f64 / 16.0).sqrt() / 30.0).abs() < 1e-15);
    }

    #[test]
    fn modulated_shared_start_at_one() {
        let spec = TargetNetworkSpec::fmlp(vec![4]).with_variant(Variant::Modulated, 0);
        let s: Vec<f32> = init_shared_weights(&spec, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.len(), crate::inr::param_count(&spec));
        assert!(s.iter().all(|&v| v == 1.0));
    }
}
