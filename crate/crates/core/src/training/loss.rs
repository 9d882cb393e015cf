/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Weighted binary cross-entropy,
/// `-(pos_weight · y · ln ŷ + (1 - y) · ln(1 - ŷ))`.
pub fn bce_loss(y_hat: f64, y: f64, pos_weight: f64) -> f64 {
    let p = y_hat.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(pos_weight * y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Derivative of [`bce_loss`] w.r.t. the pre-sigmoid logit, for
/// `y_hat = σ(logit)`. Uses the unclamped closed form
/// `pos_weight · y · (ŷ - 1) + (1 - y) · ŷ` so that saturated wrong
/// predictions still receive a gradient.
pub fn bce_logit_grad(y_hat: f64, y: f64, pos_weight: f64) -> f64 {
    pos_weight * y * (y_hat - 1.0) + (1.0 - y) * y_hat
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_probability_positive() {
        assert!((bce_loss(0.5, 1.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(format!("{:.6}", bce_loss(0.5, 1.0, 1.0)), "0.693147");
    }

    #[test]
    fn confident_correct_is_near_zero() {
        let l = bce_loss(1.0 - 1e-7, 1.0, 1.0);
        assert!((l - 1e-7).abs() < 1e-12, "{l}");
    }

    #[test]
    fn pos_weight_is_linear() {
        assert!((bce_loss(0.5, 1.0, 3.0) - 3.0 * 2f64.ln()).abs() < 1e-15);
        for y_hat in [0.01, 0.3, 0.77, 0.999] {
            let one = bce_loss(y_hat, 1.0, 1.7);
            let two = bce_loss(y_hat, 1.0, 3.4);
            assert_eq!(two, 2.0 * one);
        }
    }

    #[test]
    fn extreme_probabilities_stay_finite() {
        assert!(bce_loss(0.0, 1.0, 1.0).is_finite());
        assert!(bce_loss(1.0, 0.0, 1.0).is_finite());
    }

    #[test]
    fn logit_grad_matches_finite_difference() {
        use crate::numeric::sigmoid_scalar;
        for (logit, y, w) in [(0.3, 1.0, 1.0), (-1.2, 0.0, 1.0), (2.0, 1.0, 4.0)] {
            let eps = 1e-6;
            let num = (bce_loss(sigmoid_scalar(logit + eps), y, w)
                - bce_loss(sigmoid_scalar(logit - eps), y, w))
                / (2.0 * eps);
            let ana = bce_logit_grad(sigmoid_scalar(logit), y, w);
            assert!((num - ana).abs() < 1e-8, "{num} vs {ana}");
        }
    }
}
