use std::f64::consts::PI;

use crate::diff::Tensor;
use crate::error::{arg_err, Result};
use crate::scalar::Scalar;

/// `[sin(2⁰πt), cos(2⁰πt), …, sin(2^{L-1}πt), cos(2^{L-1}πt)]` per coordinate, shape `[n, 2L]`.
///
/// Angles are evaluated in `f64` before conversion.
pub fn positional_encoding<S: Scalar>(coords: &[S], l: usize) -> Result<Tensor<S>> {
    if l == 0 {
        return arg_err("positional encoding needs L >= 1");
    }
    if coords.is_empty() {
        return arg_err("no coordinates to encode");
    }
    let mut data = Vec::with_capacity(coords.len() * 2 * l);
    for &t in coords {
        let t = t.as_f64();
        for k in 0..l {
            let angle = (1u64 << k) as f64 * PI * t;
            data.push(S::cast(angle.sin()));
            data.push(S::cast(angle.cos()));
        }
    }
    Tensor::new(vec![coords.len(), 2 * l], data)
}
