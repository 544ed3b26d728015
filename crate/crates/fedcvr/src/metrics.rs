//! Classification metrics: confusion-matrix rates, rank-based AUC with a
//! trapezoidal ROC cross-check, and size-weighted global loss.
//!
//! Zero-denominator rates return 0.0 and are flagged (never NaN), so history
//! files stay machine-readable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty prediction set")]
    Empty,
    #[error("AUC requires at least one positive and one negative label")]
    SingleClass,
    #[error("length mismatch between losses and sizes")]
    LengthMismatch,
    #[error("total sample size is zero")]
    ZeroTotal,
}

/// Tallied outcomes of thresholded predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

/// Tally scored predictions against labels; a score ≥ threshold predicts the
/// positive class.
pub fn confusion(scored: &[(f64, u8)], threshold: f64) -> Result<ConfusionCounts, MetricsError> {
    if scored.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut counts = ConfusionCounts::default();
    for &(score, label) in scored {
        let predicted = score >= threshold;
        match (predicted, label == 1) {
            (true, true) => counts.true_pos += 1,
            (true, false) => counts.false_pos += 1,
            (false, true) => counts.false_neg += 1,
            (false, false) => counts.true_neg += 1,
        }
    }
    Ok(counts)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.true_pos + self.true_neg, self.total())
    }

    pub fn error_rate(&self) -> f64 {
        1.0 - self.accuracy()
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_pos)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_neg)
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Names of metrics whose denominator was zero (reported as 0.0).
    pub fn degenerate_flags(&self) -> Vec<&'static str> {
        let mut flags = Vec::new();
        if self.true_pos + self.false_pos == 0 {
            flags.push("precision_no_predicted_positives");
        }
        if self.true_pos + self.false_neg == 0 {
            flags.push("recall_no_positives");
        }
        if self.precision() + self.recall() == 0.0 {
            flags.push("f1_zero_precision_and_recall");
        }
        flags
    }
}

/// Rank-based (Mann–Whitney) AUC with ties counted 0.5. Equals the
/// trapezoidal area under the empirical ROC curve.
pub fn auc(scored: &[(f64, u8)]) -> Result<f64, MetricsError> {
    if scored.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n_pos = scored.iter().filter(|(_, y)| *y == 1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    // average ranks over tied scores, then sum the positive-label ranks
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scored[order[j]].0 == scored[order[i]].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if scored[idx].1 == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Empirical ROC path as (fpr, tpr) vertices from (0,0) to (1,1), one vertex
/// per distinct score (ties grouped).
pub fn roc_points(scored: &[(f64, u8)]) -> Result<Vec<(f64, f64)>, MetricsError> {
    if scored.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n_pos = scored.iter().filter(|(_, y)| *y == 1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0)); // descending
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scored[order[j]].0 == scored[order[i]].0 {
            if scored[order[j]].1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        i = j;
    }
    Ok(points)
}

/// Trapezoidal area under an ROC path.
pub fn trapezoid_auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Size-weighted mean of per-client losses.
pub fn global_loss(local_losses: &[f64], sizes: &[usize]) -> Result<f64, MetricsError> {
    if local_losses.len() != sizes.len() {
        return Err(MetricsError::LengthMismatch);
    }
    let total: usize = sizes.iter().sum();
    if total == 0 || local_losses.is_empty() {
        return Err(MetricsError::ZeroTotal);
    }
    let weighted: f64 = local_losses
        .iter()
        .zip(sizes.iter())
        .map(|(l, &n)| l * n as f64)
        .sum();
    Ok(weighted / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use rand::Rng;

    #[test]
    fn confusion_perfect_positive() {
        let scored: Vec<(f64, u8)> = vec![(1.0, 1); 8];
        let c = confusion(&scored, 0.5).unwrap();
        assert_eq!(c.true_pos, 8);
        assert_eq!(c.total(), 8);
    }

    #[test]
    fn threshold_boundary_predicts_positive() {
        let c = confusion(&[(0.5, 1), (0.5, 0)], 0.5).unwrap();
        assert_eq!(c.true_pos, 1);
        assert_eq!(c.false_pos, 1);
    }

    #[test]
    fn confusion_matches_hand_tally() {
        let mut rng = rng_for(17, "confusion", &[]);
        let scored: Vec<(f64, u8)> = (0..20)
            .map(|_| (rng.random::<f64>(), u8::from(rng.random::<f64>() < 0.4)))
            .collect();
        let c = confusion(&scored, 0.5).unwrap();
        let mut want = ConfusionCounts::default();
        for &(s, y) in &scored {
            if s >= 0.5 && y == 1 {
                want.true_pos += 1;
            } else if s >= 0.5 {
                want.false_pos += 1;
            } else if y == 1 {
                want.false_neg += 1;
            } else {
                want.true_neg += 1;
            }
        }
        assert_eq!(c, want);
    }

    #[test]
    fn rates_perfect_and_degenerate() {
        let perfect = ConfusionCounts {
            true_pos: 1,
            true_neg: 1,
            ..Default::default()
        };
        assert_eq!(perfect.accuracy(), 1.0);
        assert_eq!(perfect.f1(), 1.0);
        let none_predicted = ConfusionCounts {
            true_neg: 5,
            false_neg: 5,
            ..Default::default()
        };
        assert_eq!(none_predicted.precision(), 0.0);
        assert!(none_predicted
            .degenerate_flags()
            .contains(&"precision_no_predicted_positives"));
    }

    #[test]
    fn rates_arithmetic_oracle() {
        let c = ConfusionCounts {
            true_pos: 78,
            false_neg: 22,
            false_pos: 21,
            true_neg: 879,
        };
        assert!((c.recall() - 0.78).abs() < 1e-12);
        assert!((c.precision() - 78.0 / 99.0).abs() < 1e-12);
        let p = 78.0 / 99.0;
        let r = 0.78;
        assert!((c.f1() - 2.0 * p * r / (p + r)).abs() < 1e-12);
        assert!((c.accuracy() - 0.957).abs() < 1e-12);
        assert!((c.accuracy() + c.error_rate() - 1.0).abs() == 0.0);
    }

    #[test]
    fn auc_separated_is_one() {
        let scored = vec![(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)];
        assert_eq!(auc(&scored).unwrap(), 1.0);
    }

    #[test]
    fn auc_null_case_near_half() {
        let mut rng = rng_for(3, "auc-null", &[]);
        let scored: Vec<(f64, u8)> = (0..2000)
            .map(|_| (rng.random::<f64>(), u8::from(rng.random::<f64>() < 0.5)))
            .collect();
        let a = auc(&scored).unwrap();
        assert!((a - 0.5).abs() < 0.05, "auc = {a}");
    }

    /// O(n²) pairwise comparison oracle with ties counted 0.5.
    fn auc_bruteforce(scored: &[(f64, u8)]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for &(sp, yp) in scored.iter().filter(|(_, y)| *y == 1) {
            let _ = yp;
            for &(sn, yn) in scored.iter().filter(|(_, y)| *y == 0) {
                let _ = yn;
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
    fn auc_tied_scores_match_bruteforce() {
        let scored = vec![
            (0.5, 1),
            (0.5, 0),
            (0.5, 1),
            (0.7, 0),
            (0.7, 1),
            (0.1, 0),
            (0.9, 1),
            (0.9, 0),
            (0.3, 0),
            (0.3, 1),
        ];
        let fast = auc(&scored).unwrap();
        let slow = auc_bruteforce(&scored);
        assert_eq!(fast, slow);
    }

    #[test]
    fn auc_requires_both_classes() {
        assert!(matches!(
            auc(&[(0.5, 1), (0.9, 1)]),
            Err(MetricsError::SingleClass)
        ));
    }

    #[test]
    fn roc_perfect_path() {
        let scored = vec![(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)];
        let points = roc_points(&scored).unwrap();
        assert_eq!(points[0], (0.0, 0.0));
        assert_eq!(*points.last().unwrap(), (1.0, 1.0));
        assert!(points.contains(&(0.0, 1.0)));
        assert_eq!(trapezoid_auc(&points), 1.0);
    }

    #[test]
    fn rank_auc_equals_trapezoid_auc() {
        let mut rng = rng_for(21, "auc-cross", &[]);
        for _ in 0..50 {
            let n = 5 + (rng.random::<f64>() * 60.0) as usize;
            let scored: Vec<(f64, u8)> = (0..n)
                .map(|_| {
                    // coarse grid of scores forces ties
                    let s = (rng.random::<f64>() * 8.0).round() / 8.0;
                    (s, u8::from(rng.random::<f64>() < 0.5))
                })
                .collect();
            let has_both = scored.iter().any(|(_, y)| *y == 1) && scored.iter().any(|(_, y)| *y == 0);
            if !has_both {
                continue;
            }
            let rank = auc(&scored).unwrap();
            let trap = trapezoid_auc(&roc_points(&scored).unwrap());
            assert!((rank - trap).abs() < 1e-12, "{rank} vs {trap}");
            assert!((rank - auc_bruteforce(&scored)).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = rng_for(4, "auc-mono", &[]);
        let scored: Vec<(f64, u8)> = (0..200)
            .map(|_| (rng.random::<f64>(), u8::from(rng.random::<f64>() < 0.3)))
            .collect();
        let transformed: Vec<(f64, u8)> = scored.iter().map(|&(s, y)| (s * s * s, y)).collect();
        assert_eq!(auc(&scored).unwrap(), auc(&transformed).unwrap());
    }

    #[test]
    fn global_loss_weighting() {
        assert!((global_loss(&[1.7], &[42]).unwrap() - 1.7).abs() < 1e-15);
        assert_eq!(global_loss(&[1.0, 3.0], &[1, 1]).unwrap(), 2.0);
        assert_eq!(global_loss(&[1.0, 3.0], &[3, 1]).unwrap(), 1.5);
        assert!(matches!(
            global_loss(&[1.0], &[0]),
            Err(MetricsError::ZeroTotal)
        ));
        assert!(matches!(
            global_loss(&[1.0, 2.0], &[1]),
            Err(MetricsError::LengthMismatch)
        ));
    }
}
