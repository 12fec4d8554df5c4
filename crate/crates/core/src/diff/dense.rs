use super::kernels::{affine, affine_backward};
use super::Tensor;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

/// Gradients of a dense layer with respect to its input and parameters.
#[derive(Clone, Debug)]
pub struct DenseGrads<S> {
    pub input: Tensor<S>,
    pub weight: Tensor<S>,
    pub bias: Tensor<S>,
}

fn check_shapes<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, b_len: usize) -> Result<(usize, usize, usize)> {
    let (rows, fan_in) = x.dims2()?;
    let (fan_out, w_in) = w.dims2()?;
    if w_in != fan_in {
        return shape_err(format!("input has {fan_in} features but weight expects {w_in}"));
    }
    if b_len != fan_out {
        return shape_err(format!("bias has {b_len} entries, layer has {fan_out} outputs"));
    }
    Ok((rows, fan_in, fan_out))
}

/// `y = x·Wᵀ + b` with `x: [B, F_in]`, `W: [F_out, F_in]`, `b: [F_out]`.
pub fn dense<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    let (rows, fan_in, fan_out) = check_shapes(x, w, b.len())?;
    let y = affine(x.data(), rows, fan_in, w.data(), b.data(), fan_out);
    Tensor::new(vec![rows, fan_out], y)
}

pub fn dense_backward<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>, dy: &Tensor<S>) -> Result<DenseGrads<S>> {
    let (fan_out, _) = w.dims2()?;
    let (rows, fan_in, _) = check_shapes(x, w, fan_out)?;
    if dy.shape() != [rows, fan_out] {
        return shape_err(format!(
            "upstream gradient shape {:?} != [{rows}, {fan_out}]",
            dy.shape()
        ));
    }
    let (dx, dw, db) = affine_backward(x.data(), rows, fan_in, w.data(), fan_out, dy.data(), true);
    Ok(DenseGrads {
        input: Tensor::new(vec![rows, fan_in], dx.expect("requested"))?,
        weight: Tensor::new(vec![fan_out, fan_in], dw)?,
        bias: Tensor::new(vec![fan_out], db)?,
    })
}
