use super::Parameters;
use crate::error::{Error, Result};

/// Result of comparing analytic and central-difference gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Central finite-difference check of `analytic` against `loss` at `params`.
///
/// Per coordinate the error is `|a − n| / max(|a|, |n|, 1e-8)`; the maximum is reported.
pub fn grad_check<F>(params: &[f64], analytic: &[f64], mut loss: F, eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if params.len() != analytic.len() {
        return Err(Error::shape("grad_check", params.len(), analytic.len()));
    }
    let mut probe = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    for i in 0..params.len() {
        probe[i] = params[i] + eps;
        let plus = loss(&probe)?;
        probe[i] = params[i] - eps;
        let minus = loss(&probe)?;
        probe[i] = params[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric("grad_check"));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if err > report.max_rel_error || i == 0 {
            report = GradCheckReport {
                max_rel_error: err.max(report.max_rel_error),
                worst_index: i,
                analytic: a,
                numeric,
            };
        }
    }
    Ok(report)
}

/// Concatenates all tensors of `p` into one vector, in `tensors()` order.
pub fn flatten<P: Parameters + ?Sized>(p: &P) -> Vec<f64> {
    p.tensors()
        .into_iter()
        .flat_map(|t| t.as_slice().iter().copied())
        .collect()
}

/// Inverse of [`flatten`]. Panics if `values` is too short.
pub fn unflatten_into<P: Parameters + ?Sized>(p: &mut P, values: &[f64]) {
    let mut offset = 0;
    for t in p.tensors_mut() {
        let n = t.len();
        t.as_mut_slice().copy_from_slice(&values[offset..offset + n]);
        offset += n;
    }
}
