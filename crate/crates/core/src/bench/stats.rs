//! Rank-sum testing and Holm step-down correction.

use std::cmp::Ordering;

use statrs::function::erf::erfc;

use crate::error::{config_err, Error, Result};

/// Smallest sample size accepted by [`wilcoxon_rank_sum`].
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Continuity-corrected z score; positive when `a` tends to be larger.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Midranks (1-based) of `values`, plus the tie-correction sum Σ(t³ − t).
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon rank-sum test.
///
/// Ties get midranks and the variance is tie-corrected; the p-value uses the
/// normal approximation with a continuity correction of one half. If every
/// value is identical the variance vanishes and the p-value is 1.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    let got = a.len().min(b.len());
    if got < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { min: MIN_SAMPLES, got });
    }
    if let Some(&x) = a.iter().chain(b).find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(x));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();

    let d = rank_sum_a - n1 * (n + 1.0) / 2.0;
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if variance <= 0.0 {
        return Ok(RankSumTest { statistic: 0.0, p_value: 1.0 });
    }
    let z = (d.abs() - 0.5).max(0.0) / variance.sqrt();
    let p_value = erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(RankSumTest { statistic: z.copysign(d), p_value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolmDecision {
    pub label: String,
    pub p_value: f64,
    /// `alpha / (m − i)` for the i-th smallest p-value (0-based).
    pub threshold: f64,
    pub reject: bool,
}

/// Holm step-down correction.
///
/// Output is sorted by ascending p-value. The i-th smallest p is rejected if
/// it is strictly below `alpha / (m − i)` and every smaller p was rejected.
pub fn bonferroni_holm(p_values: &[(String, f64)], alpha: f64) -> Result<Vec<HolmDecision>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return config_err(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if let Some((_, p)) = p_values.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
        return config_err(format!("p-value {p} outside [0, 1]"));
    }
    let mut sorted: Vec<&(String, f64)> = p_values.iter().collect();
    sorted.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    let m = sorted.len();
    let mut still_rejecting = true;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, (label, p))| {
            let threshold = alpha / (m - i) as f64;
            still_rejecting &= *p < threshold;
            HolmDecision { label: label.clone(), p_value: *p, threshold, reject: still_rejecting }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(ps: &[f64]) -> Vec<(String, f64)> {
        ps.iter().enumerate().map(|(i, &p)| (format!("h{i}"), p)).collect()
    }

    #[test]
    fn identical_samples() {
        let a: Vec<f64> = (0..15).map(|i| (i % 4) as f64).collect();
        let r = wilcoxon_rank_sum(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn all_values_equal() {
        let r = wilcoxon_rank_sum(&[3.0; 12], &[3.0; 20]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_constant_samples() {
        let r = wilcoxon_rank_sum(&[1.0; 30], &[2.0; 30]).unwrap();
        assert!(r.p_value < 1e-3, "{r:?}");
        assert!(r.statistic < 0.0);
        // two tie blocks of 30: σ² = 900/12·(61 − 2·26970/3540), |d| = 450
        let sigma = (75.0f64 * (61.0 - 2.0 * 26970.0 / 3540.0)).sqrt();
        assert!((r.statistic + 449.5 / sigma).abs() < 1e-12);
    }

    #[test]
    fn swap_flips_sign() {
        let a: Vec<f64> = (0..14).map(|i| (i * 7 % 11) as f64).collect();
        let b: Vec<f64> = (0..17).map(|i| (i * 5 % 13) as f64 + 1.5).collect();
        let ab = wilcoxon_rank_sum(&a, &b).unwrap();
        let ba = wilcoxon_rank_sum(&b, &a).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert!((ab.p_value - ba.p_value).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        let err = wilcoxon_rank_sum(&[1.0; 9], &[2.0; 30]).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { min: 10, got: 9 }));
    }

    #[test]
    fn midranks_of_ties() {
        let (r, ties) = midranks(&[2.0, 1.0, 2.0, 3.0]);
        assert_eq!(r, vec![2.5, 1.0, 2.5, 4.0]);
        assert_eq!(ties, 6.0);
    }

    #[test]
    fn holm_single() {
        let d = bonferroni_holm(&labelled(&[0.01]), 0.05).unwrap();
        assert!(d[0].reject);
        assert_eq!(d[0].threshold, 0.05);
    }

    #[test]
    fn holm_hand_example() {
        let d = bonferroni_holm(&labelled(&[0.01, 0.04]), 0.05).unwrap();
        assert_eq!(d.iter().map(|x| x.threshold).collect::<Vec<_>>(), vec![0.025, 0.05]);
        assert!(d.iter().all(|x| x.reject));
    }

    #[test]
    fn holm_order_independent() {
        let a = bonferroni_holm(&[("x".into(), 0.04), ("y".into(), 0.01)], 0.05).unwrap();
        let b = bonferroni_holm(&[("y".into(), 0.01), ("x".into(), 0.04)], 0.05).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].label, "y");
    }

    #[test]
    fn holm_stops_at_first_failure() {
        // 0.03 fails 0.05/2, so 0.04 is retained even though it is below 0.05
        let d = bonferroni_holm(&labelled(&[0.03, 0.04]), 0.05).unwrap();
        assert!(!d[0].reject && !d[1].reject);
    }

    #[test]
    fn holm_threshold_is_strict() {
        let d = bonferroni_holm(&labelled(&[0.05]), 0.05).unwrap();
        assert!(!d[0].reject);
    }

    #[test]
    fn holm_rejects_bad_alpha() {
        assert!(bonferroni_holm(&labelled(&[0.01]), 0.0).is_err());
        assert!(bonferroni_holm(&labelled(&[0.01]), 1.0).is_err());
        assert!(bonferroni_holm(&labelled(&[1.5]), 0.05).is_err());
    }
}
