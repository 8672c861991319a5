//! Small order-statistic and summation helpers shared by the diagnostics.
//!
//! Sums are taken over sorted copies so that every mean in the crate is
//! invariant under permutation of the replications, bit for bit.

use std::cmp::Ordering;

pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Sum in ascending order.
pub fn ordered_sum(values: &[f64]) -> f64 {
    sorted(values).iter().sum()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    ordered_sum(values) / values.len() as f64
}

/// Sample standard deviation (denominator `n - 1`); zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - mu) * (v - mu)).collect();
    (ordered_sum(&sq) / (values.len() - 1) as f64).sqrt()
}

/// Empirical `q`-quantile: the order statistic at 1-based index `ceil(q * n)`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let v = sorted(values);
    v[quantile_index(v.len(), q)]
}

pub(crate) fn quantile_index(n: usize, q: f64) -> usize {
    let idx = (q * n as f64).ceil() as usize;
    idx.clamp(1, n) - 1
}

pub(crate) fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, |a, b| match a.partial_cmp(&b) {
        Some(Ordering::Less) => b,
        _ => a,
    })
}

/// Smallest float `c` with `c * den >= num` for every pair, under the
/// convention `0/0 = 0`. Returns `None` when some `num > 0` meets `den == 0`.
///
/// The ratio maximum is bumped up by ulps until the products dominate in
/// floating point, not just in exact arithmetic.
pub(crate) fn dominating_ratio(pairs: &[(f64, f64)]) -> Option<f64> {
    let mut c = 0.0_f64;
    for &(num, den) in pairs {
        if num <= 0.0 {
            continue;
        }
        if den <= 0.0 {
            return None;
        }
        c = c.max(num / den);
    }
    while pairs.iter().any(|&(num, den)| num > 0.0 && c * den < num) {
        c = c.next_up();
    }
    Some(c)
}
