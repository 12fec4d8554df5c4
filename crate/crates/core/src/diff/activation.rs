use super::Tensor;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

/// Elementwise nonlinearity applied after an affine map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// ELU with α = 1.
    Elu,
    /// `sin(ω·z)`.
    Sin { omega: f64 },
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(S::zero()),
            Activation::Elu => {
                if z > S::zero() {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Activation::Sin { omega } => (S::cast(omega) * z).sin(),
        }
    }

    /// Derivative at pre-activation `z`. `relu'(0)` is 0.
    #[inline]
    pub fn derivative<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Identity => S::one(),
            Activation::Relu => {
                if z > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Elu => {
                if z > S::zero() {
                    S::one()
                } else {
                    z.exp()
                }
            }
            Activation::Sin { omega } => {
                let w = S::cast(omega);
                w * (w * z).cos()
            }
        }
    }

    pub fn forward_slice<S: Scalar>(self, z: &[S]) -> Vec<S> {
        z.iter().map(|&v| self.apply(v)).collect()
    }

    /// Maps the gradient w.r.t. the activation output to the gradient w.r.t. `z`, in place.
    pub fn backward_in_place<S: Scalar>(self, z: &[S], grad: &mut [S]) {
        if self == Activation::Identity {
            return;
        }
        for (g, &v) in grad.iter_mut().zip(z) {
            *g *= self.derivative(v);
        }
    }

    fn forward<S: Scalar>(self, z: &Tensor<S>) -> Tensor<S> {
        z.map(|v| self.apply(v))
    }

    fn backward<S: Scalar>(self, z: &Tensor<S>, dy: &Tensor<S>) -> Result<Tensor<S>> {
        if z.shape() != dy.shape() {
            return shape_err(format!(
                "activation gradient shape {:?} != input shape {:?}",
                dy.shape(),
                z.shape()
            ));
        }
        let mut g = dy.clone();
        self.backward_in_place(z.data(), g.data_mut());
        Ok(g)
    }
}

pub fn relu<S: Scalar>(z: &Tensor<S>) -> Tensor<S> {
    Activation::Relu.forward(z)
}

pub fn relu_backward<S: Scalar>(z: &Tensor<S>, dy: &Tensor<S>) -> Result<Tensor<S>> {
    Activation::Relu.backward(z, dy)
}

pub fn elu<S: Scalar>(z: &Tensor<S>) -> Tensor<S> {
    Activation::Elu.forward(z)
}

pub fn elu_backward<S: Scalar>(z: &Tensor<S>, dy: &Tensor<S>) -> Result<Tensor<S>> {
    Activation::Elu.backward(z, dy)
}

pub fn sin_scaled<S: Scalar>(z: &Tensor<S>, omega: f64) -> Tensor<S> {
    Activation::Sin { omega }.forward(z)
}

pub fn sin_scaled_backward<S: Scalar>(z: &Tensor<S>, omega: f64, dy: &Tensor<S>) -> Result<Tensor<S>> {
    Activation::Sin { omega }.backward(z, dy)
}
