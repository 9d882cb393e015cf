use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-5;

/// Central-difference gradient of a scalar function at `at`.
///
/// Each coordinate costs two evaluations of `f`. Any non-finite value of `f`
/// aborts with an oracle error naming the coordinate.
pub fn finite_diff_grad<F>(mut f: F, at: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::Param(format!("eps must be positive, got {eps}")));
    }
    let mut x = at.to_vec();
    let mut grad = Vec::with_capacity(at.len());
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = f(&x);
        x[i] = orig - eps;
        let minus = f(&x);
        x[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Oracle(format!(
                "non-finite function value around coordinate {i}"
            )));
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

/// Symmetric relative error `|a - b| / max(|a|, |b|, floor)`.
///
/// The floor keeps coordinates whose true gradient is ~0 from turning
/// round-off into huge relative errors.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
