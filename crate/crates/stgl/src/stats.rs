//! Paired nonparametric comparison: the two-sided Wilcoxon signed-rank
//! test, exact for small samples.
//!
//! Zero differences are dropped (the classic zero-elimination
//! convention); identical samples therefore have no information and
//! report `p = 1.0`. Up to 25 effective pairs the permutation
//! distribution of the positive-rank sum is enumerated exactly by
//! dynamic programming over doubled ranks (doubling makes tied average
//! ranks integral); beyond that a normal approximation with tie and
//! continuity corrections takes over.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least one pair")]
    Empty,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("{0}")]
    BadParameter(String),
}

/// Largest effective sample size for which the exact distribution is
/// enumerated.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences (the W+ statistic).
    pub statistic: f64,
    /// Pairs remaining after zero elimination.
    pub n_effective: usize,
    /// Two-sided p-value: `min(1, 2 * min(P(W <= w), P(W >= w)))`.
    pub p_value: f64,
    /// Whether the exact enumeration (vs the normal approximation) was
    /// used.
    pub exact: bool,
}

/// Average ranks (1-based) of `values` sorted ascending, ties sharing
/// their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut ranks = vec![0.0; values.len()];
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos + 1;
        while end < order.len() && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        let mean_rank = (pos + 1 + end) as f64 / 2.0; // mean of pos+1 ..= end
        for &idx in &order[pos..end] {
            ranks[idx] = mean_rank;
        }
        pos = end;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test for paired samples `a` vs `b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::Empty);
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let diffs: Vec<f64> = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let m = diffs.len();
    if m == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            n_effective: 0,
            p_value: 1.0,
            exact: true,
        });
    }

    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = diffs
        .iter()
        .zip(ranks.iter())
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    if m <= EXACT_LIMIT {
        let p_value = exact_two_sided_p(&ranks, w_plus);
        Ok(WilcoxonResult {
            statistic: w_plus,
            n_effective: m,
            p_value,
            exact: true,
        })
    } else {
        let p_value = approximate_two_sided_p(&ranks, w_plus, m);
        Ok(WilcoxonResult {
            statistic: w_plus,
            n_effective: m,
            p_value,
            exact: false,
        })
    }
}

/// Exact tail probabilities by counting sign patterns. Doubling every
/// rank makes the tied average ranks integers, so the generating
/// polynomial `prod_i (1 + x^(2 r_i))` can be accumulated in an integer-
/// indexed table; counts stay below 2^25 and are exact in f64.
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in &doubled {
        reach += r;
        for w in (r..=reach).rev() {
            counts[w] += counts[w - r];
        }
    }
    let patterns = 2f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w_plus).round() as usize;
    let below: f64 = counts[..=w2].iter().sum();
    let above: f64 = counts[w2..].iter().sum();
    let tail = below.min(above) / patterns;
    (2.0 * tail).min(1.0)
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
fn approximate_two_sided_p(ranks: &[f64], w_plus: f64, m: usize) -> f64 {
    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let mut variance = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0;
    // Tie correction: subtract sum(t^3 - t) / 48 per tie group.
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let mut pos = 0;
    while pos < sorted.len() {
        let mut end = pos + 1;
        while end < sorted.len() && sorted[end] == sorted[pos] {
            end += 1;
        }
        let t = (end - pos) as f64;
        variance -= (t * t * t - t) / 48.0;
        pos = end;
    }
    if variance <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    (2.0 * (1.0 - standard_normal_cdf(z))).clamp(0.0, 1.0)
}

/// Φ(x) via the Abramowitz–Stegun 7.1.26 rational approximation to the
/// error function (absolute error below 1.5e-7 — ample for the
/// approximate branch, which is itself an approximation).
pub fn standard_normal_cdf(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    0.5 * (1.0 + erf(t))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Normalized histogram: returns `(bin_center, density)` rows with
/// `sum(density) * bin_width = 1`, for plot-data export.
pub fn histogram_density(
    values: &[f64],
    n_bins: usize,
    range: (f64, f64),
) -> Result<Vec<(f64, f64)>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (lo, hi) = range;
    if n_bins == 0 || !(hi > lo) {
        return Err(StatsError::BadParameter(format!(
            "need a positive bin count and a proper range, got {n_bins} bins over [{lo}, {hi}]"
        )));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut kept = 0usize;
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let bin = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[bin] += 1;
        kept += 1;
    }
    let norm = if kept > 0 {
        1.0 / (kept as f64 * width)
    } else {
        0.0
    };
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + (k as f64 + 0.5) * width, c as f64 * norm))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: enumerate all 2^m sign patterns directly.
    fn enumeration_p(diffs: &[f64]) -> f64 {
        let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        let m = nonzero.len();
        if m == 0 {
            return 1.0;
        }
        let magnitudes: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
        let ranks = average_ranks(&magnitudes);
        let observed: f64 = nonzero
            .iter()
            .zip(&ranks)
            .filter(|(d, _)| **d > 0.0)
            .map(|(_, r)| *r)
            .sum();
        let mut below = 0usize;
        let mut above = 0usize;
        for pattern in 0..(1usize << m) {
            let w: f64 = (0..m)
                .filter(|&i| pattern & (1 << i) != 0)
                .map(|i| ranks[i])
                .sum();
            if w <= observed + 1e-12 {
                below += 1;
            }
            if w >= observed - 1e-12 {
                above += 1;
            }
        }
        let tail = below.min(above) as f64 / (1usize << m) as f64;
        (2.0 * tail).min(1.0)
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = [0.4, 0.6, 0.9];
        let r = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.n_effective, 0);
    }

    #[test]
    fn uniformly_better_ten_pairs_hit_the_exact_extreme() {
        let a: Vec<f64> = (0..10).map(|i| 0.5 + 0.01 * i as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x - 0.07).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(r.exact);
        assert_eq!(r.n_effective, 10);
        assert!(
            (r.p_value - 2.0 / 1024.0).abs() <= 1e-12,
            "p = {}",
            r.p_value
        );
    }

    #[test]
    fn swapping_the_methods_leaves_p_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(503);
        for _ in 0..20 {
            let a: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let ab = wilcoxon_signed_rank(&a, &b).unwrap();
            let ba = wilcoxon_signed_rank(&b, &a).unwrap();
            assert!(
                (ab.p_value - ba.p_value).abs() <= 1e-12,
                "{} vs {}",
                ab.p_value,
                ba.p_value
            );
        }
    }

    #[test]
    fn exact_p_matches_sign_pattern_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(509);
        for trial in 0..100 {
            let m = rng.gen_range(1..=10);
            // Small integer differences force plenty of rank ties.
            let diffs: Vec<f64> = (0..m)
                .map(|_| (rng.gen_range(-3i32..=3)) as f64 * 0.25)
                .collect();
            let a: Vec<f64> = diffs.iter().map(|d| 0.5 + d).collect();
            let b = vec![0.5; m];
            let r = wilcoxon_signed_rank(&a, &b).unwrap();
            let oracle = enumeration_p(&diffs);
            assert!(
                (r.p_value - oracle).abs() <= 1e-12,
                "trial {trial}: dp {} vs enumeration {oracle} (diffs {diffs:?})",
                r.p_value
            );
        }
    }

    #[test]
    fn zeros_are_dropped_before_ranking() {
        // Three informative pairs plus two ties.
        let a = [1.0, 2.0, 3.0, 5.0, 7.0];
        let b = [0.5, 1.0, 2.5, 5.0, 7.0];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.n_effective, 3);
        let no_ties = wilcoxon_signed_rank(&a[..3], &b[..3]).unwrap();
        assert_eq!(r.p_value, no_ties.p_value);
    }

    #[test]
    fn large_samples_fall_back_to_the_normal_approximation() {
        let mut rng = ChaCha8Rng::seed_from_u64(521);
        let a: Vec<f64> = (0..40).map(|_| rng.gen::<f64>() + 0.3).collect();
        let b: Vec<f64> = (0..40).map(|_| rng.gen::<f64>()).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value < 0.05, "p = {}", r.p_value);
    }

    #[test]
    fn approximation_is_close_to_exact_at_the_boundary() {
        // At m = 25 both machineries are meaningful; they should agree to
        // a couple of percent.
        let mut rng = ChaCha8Rng::seed_from_u64(523);
        let a: Vec<f64> = (0..25).map(|_| rng.gen::<f64>() + 0.15).collect();
        let b: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let exact = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(exact.exact);
        let magnitudes: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .filter(|d| *d != 0.0)
            .collect();
        let ranks = average_ranks(&magnitudes);
        let approx = approximate_two_sided_p(&ranks, exact.statistic, exact.n_effective);
        assert!(
            (exact.p_value - approx).abs() <= 0.02,
            "exact {} vs approx {approx}",
            exact.p_value
        );
    }

    #[test]
    fn normal_cdf_matches_known_values() {
        assert!((standard_normal_cdf(0.0) - 0.5).abs() <= 1e-9);
        assert!((standard_normal_cdf(1.959964) - 0.975).abs() <= 1e-5);
        assert!((standard_normal_cdf(-1.959964) - 0.025).abs() <= 1e-5);
    }

    #[test]
    fn histogram_density_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(541);
        let values: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let hist = histogram_density(&values, 20, (0.0, 1.0)).unwrap();
        let width = 1.0 / 20.0;
        let integral: f64 = hist.iter().map(|(_, d)| d * width).sum();
        assert!((integral - 1.0).abs() <= 1e-12);
        assert_eq!(hist.len(), 20);
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            wilcoxon_signed_rank(&[], &[]),
            Err(StatsError::Empty)
        ));
        assert!(matches!(
            wilcoxon_signed_rank(&[f64::NAN], &[1.0]),
            Err(StatsError::NonFinite)
        ));
        assert!(histogram_density(&[1.0], 0, (0.0, 1.0)).is_err());
    }
}
