use crate::error::{arg_err, Result};

/// Per-bin emphasis `w_i = N·i^p / Σ_{j=1..N} j^p` for `i = 1..N`.
///
/// The weights sum to `N`; `p = 0` gives all ones and larger `p` leans toward high bins.
pub fn freq_weights(n: usize, p: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return arg_err("frequency weighting needs at least one bin");
    }
    if !p.is_finite() || p < 0.0 {
        return arg_err(format!("weighting exponent must be finite and non-negative, got {p}"));
    }
    let raw: Vec<f64> = (1..=n).map(|i| (i as f64).powf(p)).collect();
    let total: f64 = raw.iter().sum();
    let scale = n as f64 / total;
    Ok(raw.into_iter().map(|r| r * scale).collect())
}

/// Linear blend from uniform weights at epoch 0 to `target` at `anneal_epochs`.
pub fn anneal_weights(target: &[f64], epoch: usize, anneal_epochs: usize) -> Vec<f64> {
    let alpha = if anneal_epochs == 0 {
        1.0
    } else {
        (epoch as f64 / anneal_epochs as f64).min(1.0)
    };
    target.iter().map(|&t| (1.0 - alpha) + alpha * t).collect()
}
