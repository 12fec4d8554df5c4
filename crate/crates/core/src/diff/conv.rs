use super::Tensor;
use crate::error::{arg_err, shape_err, Result};
use crate::scalar::Scalar;

/// Output length of a causal strided convolution: `ceil(len / stride)`.
pub fn conv1d_output_len(len: usize, stride: usize) -> usize {
    len.div_ceil(stride)
}

#[derive(Clone, Debug)]
pub struct ConvGrads<S> {
    pub input: Tensor<S>,
    pub kernel: Tensor<S>,
    pub bias: Tensor<S>,
}

struct ConvDims {
    batch: usize,
    c_in: usize,
    len: usize,
    c_out: usize,
    k: usize,
    out_len: usize,
}

fn conv_dims<S: Scalar>(input: &Tensor<S>, kernel: &Tensor<S>, bias: &Tensor<S>, stride: usize) -> Result<ConvDims> {
    if stride == 0 {
        return arg_err("convolution stride must be at least 1");
    }
    let (batch, c_in, len) = input.dims3()?;
    let (c_out, k_in, k) = kernel.dims3()?;
    if k_in != c_in {
        return shape_err(format!("input has {c_in} channels, kernel expects {k_in}"));
    }
    if bias.len() != c_out {
        return shape_err(format!("bias has {} entries, kernel has {c_out} output channels", bias.len()));
    }
    Ok(ConvDims { batch, c_in, len, c_out, k, out_len: conv1d_output_len(len, stride) })
}

/// Causal strided 1-D convolution.
///
/// `input: [B, C_in, T]`, `kernel: [C_out, C_in, K]`. The input is left-padded
/// with `K - 1` zeros, so output frame `o` sees input samples
/// `o·stride - (K-1) ..= o·stride`. Output shape is `[B, C_out, ceil(T/stride)]`.
pub fn conv1d_strided<S: Scalar>(
    input: &Tensor<S>,
    kernel: &Tensor<S>,
    bias: &Tensor<S>,
    stride: usize,
) -> Result<Tensor<S>> {
    let d = conv_dims(input, kernel, bias, stride)?;
    let x = input.data();
    let w = kernel.data();
    let mut out = vec![S::zero(); d.batch * d.c_out * d.out_len];
    for b in 0..d.batch {
        for co in 0..d.c_out {
            let row = &mut out[(b * d.c_out + co) * d.out_len..][..d.out_len];
            row.fill(bias.data()[co]);
            for ci in 0..d.c_in {
                let xs = &x[(b * d.c_in + ci) * d.len..][..d.len];
                let ws = &w[(co * d.c_in + ci) * d.k..][..d.k];
                for (o, acc) in row.iter_mut().enumerate() {
                    // padded index o*stride + j maps to input index o*stride + j - (k-1)
                    let end = o * stride;
                    let first_j = (d.k - 1).saturating_sub(end);
                    let mut sum = S::zero();
                    for j in first_j..d.k {
                        sum += ws[j] * xs[end + j + 1 - d.k];
                    }
                    *acc += sum;
                }
            }
        }
    }
    Tensor::new(vec![d.batch, d.c_out, d.out_len], out)
}

pub fn conv1d_strided_backward<S: Scalar>(
    input: &Tensor<S>,
    kernel: &Tensor<S>,
    bias: &Tensor<S>,
    stride: usize,
    dy: &Tensor<S>,
) -> Result<ConvGrads<S>> {
    let d = conv_dims(input, kernel, bias, stride)?;
    if dy.shape() != [d.batch, d.c_out, d.out_len] {
        return shape_err(format!(
            "upstream gradient shape {:?} != [{}, {}, {}]",
            dy.shape(),
            d.batch,
            d.c_out,
            d.out_len
        ));
    }
    let x = input.data();
    let w = kernel.data();
    let g = dy.data();
    let mut dx = vec![S::zero(); x.len()];
    let mut dw = vec![S::zero(); w.len()];
    let mut db = vec![S::zero(); d.c_out];
    for b in 0..d.batch {
        for co in 0..d.c_out {
            let gs = &g[(b * d.c_out + co) * d.out_len..][..d.out_len];
            db[co] += gs.iter().copied().sum::<S>();
            for ci in 0..d.c_in {
                let xs = &x[(b * d.c_in + ci) * d.len..][..d.len];
                let dxs = &mut dx[(b * d.c_in + ci) * d.len..][..d.len];
                let ws = &w[(co * d.c_in + ci) * d.k..][..d.k];
                let dws = &mut dw[(co * d.c_in + ci) * d.k..][..d.k];
                for (o, &go) in gs.iter().enumerate() {
                    let end = o * stride;
                    let first_j = (d.k - 1).saturating_sub(end);
                    for j in first_j..d.k {
                        let t = end + j + 1 - d.k;
                        dws[j] += go * xs[t];
                        dxs[t] += go * ws[j];
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(input.shape().to_vec(), dx)?,
        kernel: Tensor::new(kernel.shape().to_vec(), dw)?,
        bias: Tensor::new(vec![d.c_out], db)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kernel_is_identity() {
        let x = Tensor::new(vec![1, 1, 4], vec![0.5f64, -1.0, 2.0, 3.0]).unwrap();
        let k = Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap();
        let b = Tensor::zeros(&[1]);
        assert_eq!(conv1d_strided(&x, &k, &b, 1).unwrap(), x);
    }

    #[test]
    fn causal_padding_selects_expected_positions() {
        let (a, b_, c, d) = (1.0f64, 2.0, 3.0, 4.0);
        let x = Tensor::new(vec![1, 1, 4], vec![a, b_, c, d]).unwrap();
        let k = Tensor::new(vec![1, 1, 2], vec![0.0, 1.0]).unwrap();
        let bias = Tensor::zeros(&[1]);
        let y = conv1d_strided(&x, &k, &bias, 2).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2]);
        assert_eq!(y.data(), &[a, c]);
    }

    #[test]
    fn output_length_is_ceil_division() {
        assert_eq!(conv1d_output_len(32768, 320), 103);
        assert_eq!(conv1d_output_len(5, 2), 3);
        let x = Tensor::<f32>::zeros(&[2, 3, 5]);
        let k = Tensor::zeros(&[4, 3, 5]);
        let b = Tensor::zeros(&[4]);
        assert_eq!(conv1d_strided(&x, &k, &b, 2).unwrap().shape(), &[2, 4, 3]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let x = Tensor::<f32>::zeros(&[1, 2, 5]);
        let k = Tensor::zeros(&[1, 3, 2]);
        let b = Tensor::zeros(&[1]);
        assert!(matches!(conv1d_strided(&x, &k, &b, 1), Err(crate::Error::Shape(_))));
        let k = Tensor::zeros(&[1, 2, 2]);
        assert!(matches!(conv1d_strided(&x, &k, &b, 0), Err(crate::Error::Argument(_))));
    }
}
