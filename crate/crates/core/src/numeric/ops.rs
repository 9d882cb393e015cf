//! Elementwise nonlinearities, row softmax and dropout masks.

use crate::error::{Error, Result};

use super::{Matrix, SeededRng};

/// Largest magnitude fed to `exp` by [`sigmoid_scalar`]; keeps the result
/// strictly inside `(0, 1)` on the negative side.
const SIGMOID_CLAMP: f64 = 709.0;

/// Row-wise softmax with per-row max subtraction.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Backward pass of [`softmax_rows`]: given the forward output `a` and the
/// upstream gradient `grad_a`, returns the gradient w.r.t. the logits.
pub fn softmax_rows_backward(a: &Matrix, grad_a: &Matrix) -> Result<Matrix> {
    if a.shape() != grad_a.shape() {
        return Err(Error::Shape {
            op: "softmax_rows_backward",
            left: a.shape(),
            right: grad_a.shape(),
        });
    }
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for r in 0..a.rows() {
        let (ar, gr) = (a.row(r), grad_a.row(r));
        let dot: f64 = ar.iter().zip(gr).map(|(x, g)| x * g).sum();
        for ((o, &x), &g) in out.row_mut(r).iter_mut().zip(ar).zip(gr) {
            *o = x * (g - dot);
        }
    }
    Ok(out)
}

pub fn relu(m: &Matrix) -> Matrix {
    m.map(|v| v.max(0.0))
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(m: &Matrix) -> Matrix {
    m.map(sigmoid_scalar)
}

/// Inverted-dropout mask: each entry is `0` with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut SeededRng) -> Result<Matrix> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Param(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(Matrix::filled(rows, cols, 1.0));
    }
    let keep = 1.0 / (1.0 - rate);
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = if rng.next_f64() < rate { 0.0 } else { keep };
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_uniform_row() {
        let s = softmax_rows(&Matrix::from_rows(&[[0.0, 0.0, 0.0]]));
        for &v in s.row(0) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_ln2_row() {
        // exp(ln 2) = 2, exp(0) = 1 -> [2/3, 1/3]
        let s = softmax_rows(&Matrix::from_rows(&[[2f64.ln(), 0.0]]));
        assert!((s.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_large_logits_do_not_overflow() {
        let s = softmax_rows(&Matrix::from_rows(&[[1000.0, 0.0]]));
        assert!(s.is_finite());
        assert!((s.get(0, 0) - 1.0).abs() < 1e-15);
        assert!(s.get(0, 1) >= 0.0 && s.get(0, 1) < 1e-300);
    }

    #[test]
    fn relu_sign_boundary() {
        let r = relu(&Matrix::from_rows(&[[-1.0, 0.0, 2.0]]));
        assert_eq!(r.as_slice(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        let tiny = sigmoid_scalar(-709.0);
        assert!(tiny > 0.0 && tiny.is_finite());
        let clamped = sigmoid_scalar(-1e6);
        assert!(clamped > 0.0);
        assert!(sigmoid_scalar(1e6) <= 1.0);
    }

    #[test]
    fn dropout_rate_zero_is_all_ones() {
        let mut rng = SeededRng::new(1);
        let m = dropout_mask(4, 5, 0.0, &mut rng).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dropout_half_rate_concentration() {
        let mut rng = SeededRng::new(42);
        let m = dropout_mask(100, 100, 0.5, &mut rng).unwrap();
        let zeros = m.as_slice().iter().filter(|&&v| v == 0.0).count();
        let frac = zeros as f64 / 1e4;
        assert!((0.45..=0.55).contains(&frac), "zero fraction {frac}");
        assert!(m.as_slice().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_rate_one_rejected() {
        let mut rng = SeededRng::new(1);
        assert!(matches!(
            dropout_mask(2, 2, 1.0, &mut rng),
            Err(Error::Param(_))
        ));
    }
}
