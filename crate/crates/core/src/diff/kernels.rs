//! Slice-level matrix kernels backing the dense layers.
//!
//! All matrices are row-major. Products go through ndarray's blocked GEMM,
//! which dispatches to the optimized `f32`/`f64` paths.

use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};

use crate::scalar::Scalar;

fn view<S: Scalar>(data: &[S], rows: usize, cols: usize) -> ArrayView2<'_, S> {
    ArrayView2::from_shape((rows, cols), data).expect("kernel operand shape")
}

fn view_mut<S: Scalar>(data: &mut [S], rows: usize, cols: usize) -> ArrayViewMut2<'_, S> {
    ArrayViewMut2::from_shape((rows, cols), data).expect("kernel output shape")
}

/// `out[m,n] (+)= a[m,k] · b[n,k]ᵀ`
pub fn matmul_nt<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize, out: &mut [S], accumulate: bool) {
    let beta = if accumulate { S::one() } else { S::zero() };
    general_mat_mul(S::one(), &view(a, m, k), &view(b, n, k).t(), beta, &mut view_mut(out, m, n));
}

/// `out[m,n] (+)= a[m,k] · b[k,n]`
pub fn matmul_nn<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize, out: &mut [S], accumulate: bool) {
    let beta = if accumulate { S::one() } else { S::zero() };
    general_mat_mul(S::one(), &view(a, m, k), &view(b, k, n), beta, &mut view_mut(out, m, n));
}

/// `out[m,n] (+)= a[k,m]ᵀ · b[k,n]`
pub fn matmul_tn<S: Scalar>(a: &[S], b: &[S], k: usize, m: usize, n: usize, out: &mut [S], accumulate: bool) {
    let beta = if accumulate { S::one() } else { S::zero() };
    general_mat_mul(S::one(), &view(a, k, m).t(), &view(b, k, n), beta, &mut view_mut(out, m, n));
}

/// Affine map `y = x·Wᵀ + b` for `x: [rows, fan_in]`, `W: [fan_out, fan_in]`.
pub fn affine<S: Scalar>(x: &[S], rows: usize, fan_in: usize, w: &[S], b: &[S], fan_out: usize) -> Vec<S> {
    let mut y = Vec::with_capacity(rows * fan_out);
    for _ in 0..rows {
        y.extend_from_slice(b);
    }
    matmul_nt(x, w, rows, fan_in, fan_out, &mut y, true);
    y
}

/// Backward of [`affine`]. Returns `(dx, dW, db)`; `dx` is skipped when `need_input` is false.
pub fn affine_backward<S: Scalar>(
    x: &[S],
    rows: usize,
    fan_in: usize,
    w: &[S],
    fan_out: usize,
    dy: &[S],
    need_input: bool,
) -> (Option<Vec<S>>, Vec<S>, Vec<S>) {
    let dx = need_input.then(|| {
        let mut dx = vec![S::zero(); rows * fan_in];
        matmul_nn(dy, w, rows, fan_out, fan_in, &mut dx, false);
        dx
    });
    let mut dw = vec![S::zero(); fan_out * fan_in];
    matmul_tn(dy, x, rows, fan_out, fan_in, &mut dw, false);
    let mut db = vec![S::zero(); fan_out];
    for row in dy.chunks_exact(fan_out) {
        for (acc, &g) in db.iter_mut().zip(row) {
            *acc += g;
        }
    }
    (dx, dw, db)
}
