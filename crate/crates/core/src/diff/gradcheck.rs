use super::ParamStore;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Worst gradient discrepancy found for one named parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamError {
    pub name: String,
    /// `max_i |analytic_i - numeric_i|` divided by the largest gradient magnitude of the tensor.
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tol: f64,
    pub params: Vec<ParamError>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.passed)
    }

    pub fn worst(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ParamError> {
        self.params.iter().filter(|p| !p.passed)
    }
}

/// Compares the gradients stored in `analytic` against central finite differences of `f`.
///
/// The finite differences are always taken in `f64`, on a copy of the
/// parameters promoted from `S`, using the five-point stencil
/// `(8(f(θ+h) - f(θ-h)) - (f(θ+2h) - f(θ-2h))) / 12h` with `h = 1e-5 · max(1, |θ|)`.
pub fn grad_check<S, F>(analytic: &ParamStore<S>, mut f: F, tol: f64) -> Result<GradCheckReport>
where
    S: Scalar,
    F: FnMut(&ParamStore<f64>) -> f64,
{
    let mut probe = analytic.cast::<f64>();
    let base = f(&probe);
    if !base.is_finite() {
        return Err(Error::Numeric(format!("objective is not finite at the base point: {base}")));
    }
    let names: Vec<String> = probe.names().map(str::to_owned).collect();
    let mut params = Vec::with_capacity(names.len());
    for name in names {
        let n = probe.param(&name)?.value().len();
        let mut max_diff = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            let theta = probe.param(&name)?.data()[i];
            let h = 1e-5 * theta.abs().max(1.0);
            let mut eval_at = |offset: f64| -> Result<f64> {
                probe.param_mut(&name)?.data_mut()[i] = theta + offset;
                let v = f(&probe);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Numeric(format!("objective not finite while perturbing `{name}`[{i}]")))
                }
            };
            let (up, down) = (eval_at(h)?, eval_at(-h)?);
            let (up2, down2) = (eval_at(2.0 * h)?, eval_at(-2.0 * h)?);
            probe.param_mut(&name)?.data_mut()[i] = theta;
            let numeric = (8.0 * (up - down) - (up2 - down2)) / (12.0 * h);
            let exact = analytic.param(&name)?.grad_data()[i].as_f64();
            max_diff = max_diff.max((exact - numeric).abs());
            scale = scale.max(exact.abs()).max(numeric.abs());
        }
        let max_rel_error = if scale > 0.0 { max_diff / scale } else { 0.0 };
        params.push(ParamError { name, max_rel_error, passed: max_rel_error < tol });
    }
    Ok(GradCheckReport { tol, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Tensor;

    fn quadratic_store(scale_grad: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        let theta = vec![0.3, -1.7, 2.5, 4.0];
        s.insert("theta", Tensor::vector(theta.clone()).unwrap()).unwrap();
        let g: Vec<f64> = theta.iter().map(|t| 2.0 * t * scale_grad).collect();
        s.accumulate_grad("theta", &g).unwrap();
        s
    }

    fn sum_of_squares(s: &ParamStore<f64>) -> f64 {
        s.iter().flat_map(|(_, p)| p.data().iter()).map(|v| v * v).sum()
    }

    #[test]
    fn quadratic_matches_exactly() {
        let report = grad_check(&quadratic_store(1.0), sum_of_squares, 1e-9).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.worst() < 1e-9);
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let report = grad_check(&quadratic_store(2.0), sum_of_squares, 1e-4).unwrap();
        assert!(!report.passed());
        assert_eq!(report.failures().count(), 1);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let r = grad_check(&quadratic_store(1.0), |_| f64::NAN, 1e-4);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
