use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metric suite for one scored set at one operating threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    /// No example was predicted positive, so precision is 0 by convention.
    pub precision_undefined: bool,
}

fn class_counts(scores: &[(f64, u8)]) -> (usize, usize) {
    let pos = scores.iter().filter(|(_, l)| *l == 1).count();
    (pos, scores.len() - pos)
}

/// Mann–Whitney AUC with midranks: the fraction of positive/negative pairs
/// ordered correctly, tied pairs counting one half.
pub fn auc(scores: &[(f64, u8)]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(scores);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric(format!(
            "AUC needs both classes, got {n_pos} positive and {n_neg} negative"
        )));
    }
    let mut sorted: Vec<(f64, u8)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
            j += 1;
        }
        // Ranks are 1-based; the tie group i..=j shares their mean.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = sorted[i..=j].iter().filter(|(_, l)| *l == 1).count();
        rank_sum_pos += midrank * pos_in_group as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

/// Confusion counts and precision/recall/F1 predicting positive iff
/// `score >= threshold`. The AUC field is left at 0; see [`evaluate`].
pub fn prf_at(scores: &[(f64, u8)], threshold: f64) -> MetricsReport {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for &(s, l) in scores {
        match (s >= threshold, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    from_counts(tp, fp, tn, fn_, threshold)
}

pub(crate) fn from_counts(
    tp: usize,
    fp: usize,
    tn: usize,
    fn_: usize,
    threshold: f64,
) -> MetricsReport {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    MetricsReport {
        auc: 0.0,
        precision,
        recall,
        f1,
        threshold,
        tp,
        fp,
        tn,
        fn_,
        n_pos: tp + fn_,
        n_neg: fp + tn,
        precision_undefined: tp + fp == 0,
    }
}

/// Candidate thresholds: 0, 1, and the midpoint between each pair of
/// adjacent distinct scores.
fn candidates(scores: &[(f64, u8)]) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.iter().map(|(s, _)| *s).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut out = vec![0.0, 1.0];
    out.extend(distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Threshold maximizing F1 over [`candidates`]; ties go to the larger
/// threshold.
pub fn best_f1_threshold(scores: &[(f64, u8)]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(scores);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric(format!(
            "threshold search needs both classes, got {n_pos} positive and {n_neg} negative"
        )));
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for t in candidates(scores) {
        let f1 = prf_at(scores, t).f1;
        if f1 >= best.0 {
            best = (f1, t);
        }
    }
    Ok(best.1)
}

/// AUC plus the threshold-dependent metrics.
pub fn evaluate(scores: &[(f64, u8)], threshold: f64) -> Result<MetricsReport> {
    let auc = auc(scores)?;
    Ok(MetricsReport {
        auc,
        ..prf_at(scores, threshold)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::SeededRng;
    use proptest::prelude::*;

    fn labeled(pos: &[f64], neg: &[f64]) -> Vec<(f64, u8)> {
        pos.iter()
            .map(|&s| (s, 1))
            .chain(neg.iter().map(|&s| (s, 0)))
            .collect()
    }

    /// O(P·N) pair count; the independent reference for `auc`.
    fn brute_force_auc(scores: &[(f64, u8)]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for &(sp, lp) in scores {
            if lp != 1 {
                continue;
            }
            for &(sn, ln) in scores {
                if ln != 0 {
                    continue;
                }
                pairs += 1.0;
                if sp > sn {
                    wins += 1.0;
                } else if sp == sn {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&labeled(&[0.9, 0.8], &[0.1, 0.7])).unwrap(), 1.0);
        assert_eq!(auc(&labeled(&[0.8, 0.4], &[0.6, 0.4])).unwrap(), 0.625);
        assert_eq!(auc(&labeled(&[0.3, 0.3, 0.3], &[0.3, 0.3])).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_is_error() {
        assert!(matches!(
            auc(&labeled(&[0.1, 0.2], &[])),
            Err(Error::Metric(_))
        ));
        assert!(matches!(auc(&labeled(&[], &[0.1])), Err(Error::Metric(_))));
    }

    #[test]
    fn prf_examples() {
        // tp=3 fp=1 fn=2 tn=1
        let s = labeled(&[0.9, 0.8, 0.7, 0.2, 0.1], &[0.95, 0.3]);
        let r = prf_at(&s, 0.5);
        assert_eq!((r.tp, r.fp, r.fn_, r.tn), (3, 1, 2, 1));
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.6);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);

        assert_eq!(prf_at(&s, 0.0).recall, 1.0);

        let none = prf_at(&s, 0.99);
        assert_eq!(none.precision, 0.0);
        assert_eq!(none.f1, 0.0);
        assert!(none.precision_undefined);
    }

    #[test]
    fn threshold_on_separated_scores() {
        let s = labeled(&[0.9], &[0.1]);
        let t = best_f1_threshold(&s).unwrap();
        assert!(t > 0.1 && t <= 0.9);
        assert_eq!(prf_at(&s, t).f1, 1.0);

        let s = labeled(&[0.7, 0.8, 0.95], &[0.1, 0.2, 0.4]);
        let t = best_f1_threshold(&s).unwrap();
        // Only the midpoint 0.55 lies inside the gap (0.4, 0.7].
        assert!((t - 0.55).abs() < 1e-15);
    }

    #[test]
    fn threshold_on_identical_scores_predicts_all_positive() {
        let s = labeled(&[0.5, 0.5], &[0.5, 0.5, 0.5]);
        let t = best_f1_threshold(&s).unwrap();
        let r = prf_at(&s, t);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.fp, 3);
        assert!((r.f1 - 2.0 * 0.4 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn threshold_single_class_is_error() {
        assert!(best_f1_threshold(&labeled(&[0.1], &[])).is_err());
    }

    #[test]
    fn auc_matches_brute_force_with_ties() {
        let mut rng = SeededRng::new(2024);
        for trial in 0..1000 {
            let n = 2 + rng.below(199);
            let mut s: Vec<(f64, u8)> = (0..n)
                .map(|_| {
                    // Coarse grid forces ties.
                    let score = if rng.bernoulli(0.5) {
                        (rng.below(10) as f64) / 10.0
                    } else {
                        rng.next_f64()
                    };
                    (score, u8::from(rng.bernoulli(0.4)))
                })
                .collect();
            s[0].1 = 1;
            s[1].1 = 0;
            let fast = auc(&s).unwrap();
            let slow = brute_force_auc(&s);
            assert!(
                (fast - slow).abs() <= 1e-12,
                "trial {trial}: {fast} vs {slow}"
            );
        }
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_transforms(
            raw in prop::collection::vec((-2.0f64..2.0, 0u8..2), 2..80)
        ) {
            let mut s = raw;
            s[0].1 = 1;
            s[1].1 = 0;
            let base = auc(&s).unwrap();
            let cube: Vec<_> = s.iter().map(|&(x, l)| (x * x * x, l)).collect();
            let sig: Vec<_> = s
                .iter()
                .map(|&(x, l)| (crate::numeric::sigmoid_scalar(5.0 * x - 2.0), l))
                .collect();
            prop_assert!((auc(&cube).unwrap() - base).abs() <= 1e-12);
            prop_assert!((auc(&sig).unwrap() - base).abs() <= 1e-12);
        }

        #[test]
        fn prf_counts_are_consistent(
            s in prop::collection::vec((0.0f64..1.0, 0u8..2), 1..100),
            t in 0.0f64..1.0,
        ) {
            let r = prf_at(&s, t);
            prop_assert_eq!(r.tp + r.fp + r.tn + r.fn_, s.len());
            prop_assert_eq!(r.tp + r.fn_, r.n_pos);
            prop_assert_eq!(r.fp + r.tn, r.n_neg);
            for v in [r.precision, r.recall, r.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if r.precision + r.recall > 0.0 {
                let f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
                prop_assert!((r.f1 - f1).abs() < 1e-15);
            }
        }

        #[test]
        fn best_threshold_beats_grid(
            raw in prop::collection::vec((0.0f64..1.0, 0u8..2), 2..60)
        ) {
            let mut s = raw;
            s[0].1 = 1;
            s[1].1 = 0;
            let t = best_f1_threshold(&s).unwrap();
            let best = prf_at(&s, t).f1;
            for k in 0..=100 {
                let grid = prf_at(&s, k as f64 / 100.0).f1;
                prop_assert!(best >= grid, "grid {} f1 {} > best {}", k, grid, best);
            }
        }
    }
}
