//! Binary classification metrics: rank-based AUC and F1 with the high class
//! positive.

use super::LearnError;

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs where the
/// positive scores higher, ties counting one half. Computed via average
/// ranks in O(n log n).
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, LearnError> {
    if scores.len() != labels.len() {
        return Err(LearnError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average rank.
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Confusion counts (tp, fp, fn, tn) with the high class positive.
pub fn confusion(predictions: &[u8], labels: &[u8]) -> Result<[usize; 4], LearnError> {
    if predictions.len() != labels.len() {
        return Err(LearnError::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    let mut c = [0usize; 4];
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => c[0] += 1,
            (1, 0) => c[1] += 1,
            (0, 1) => c[2] += 1,
            (0, 0) => c[3] += 1,
            _ => {
                return Err(LearnError::LengthMismatch {
                    left: p as usize,
                    right: l as usize,
                })
            }
        }
    }
    Ok(c)
}

/// F1 with positive = high. Zero by convention when precision + recall is
/// zero; callers flag that degenerate case in their reports.
pub fn f1(predictions: &[u8], labels: &[u8]) -> Result<f64, LearnError> {
    let [tp, fp, fnn, _tn] = confusion(predictions, labels)?;
    Ok(f1_from_confusion(tp, fp, fnn))
}

pub fn f1_from_confusion(tp: usize, fp: usize, fnn: usize) -> f64 {
    let denom = 2 * tp + fp + fnn;
    if denom == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / denom as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive pair-count oracle.
    fn auc_brute(scores: &[f64], labels: &[u8]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0usize;
        for (i, (&si, &li)) in scores.iter().zip(labels).enumerate() {
            if li != 1 {
                continue;
            }
            for (j, (&sj, &lj)) in scores.iter().zip(labels).enumerate() {
                if i == j || lj != 0 {
                    continue;
                }
                pairs += 1;
                if si > sj {
                    total += 1.0;
                } else if si == sj {
                    total += 0.5;
                }
            }
        }
        total / pairs as f64
    }

    #[test]
    fn perfect_separation() {
        assert_abs_diff_eq!(auc(&[0.9, 0.8, 0.3], &[1, 1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn full_tie_is_half() {
        assert_abs_diff_eq!(auc(&[0.5, 0.5], &[1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn matches_pair_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..200 {
            let n = rng.gen_range(2..=12);
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0..6) as f64) / 5.0) // force ties
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 1;
            labels[n - 1] = 0;
            let fast = auc(&scores, &labels).unwrap();
            let slow = auc_brute(&scores, &labels);
            assert_eq!(fast, slow, "scores {scores:?} labels {labels:?}");
        }
    }

    #[test]
    fn label_flip_complements_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(4..20);
            let mut scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            scores.dedup();
            let mut labels: Vec<u8> = (0..scores.len()).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 1;
            labels[scores.len() - 1] = 0;
            let a = auc(&scores, &labels).unwrap();
            let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
            let b = auc(&scores, &flipped).unwrap();
            assert_abs_diff_eq!(a, 1.0 - b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(
            auc(&[0.1, 0.2], &[1, 1]),
            Err(LearnError::SingleClass)
        ));
    }

    #[test]
    fn f1_direct_formula() {
        // TP=2, FP=1, FN=1 -> P = R = 2/3 -> F1 = 2/3.
        let preds = vec![1, 1, 1, 0, 0];
        let labels = vec![1, 1, 0, 1, 0];
        assert_abs_diff_eq!(f1(&preds, &labels).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn f1_perfect_and_degenerate() {
        assert_abs_diff_eq!(f1(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        // No positive predictions, no positive labels: 0 by convention.
        assert_abs_diff_eq!(f1(&[0, 0], &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            f1(&[1], &[1, 0]),
            Err(LearnError::LengthMismatch { .. })
        ));
    }
}
