//! Minimal differentiable layer set with hand-derived backward rules.
//!
//! There is no computation graph: every layer exposes a forward function and a
//! matching backward function that maps an upstream gradient to gradients of
//! its inputs and parameters. Composite models chain them explicitly.

mod activation;
mod conv;
mod dense;
mod gradcheck;
pub mod kernels;
mod params;
mod tensor;

pub use activation::{
    elu, elu_backward, relu, relu_backward, sin_scaled, sin_scaled_backward, Activation,
};
pub use conv::{conv1d_output_len, conv1d_strided, conv1d_strided_backward, ConvGrads};
pub use dense::{dense, dense_backward, DenseGrads};
pub use gradcheck::{grad_check, GradCheckReport, ParamError};
pub use params::{Param, ParamStore};
pub use tensor::Tensor;
