//! Frequency statistics for the Monte-Carlo checks: exact (Clopper-Pearson
//! style) binomial confidence bounds computed by bisection on the binomial
//! tail, and order statistics.

/// log of C(n, k), via the log-gamma free running-sum form.
fn log_binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 0.0;
    for i in 0..k {
        acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

/// P(Bin(n, p) >= k), numerically stable for n up to ~1e5.
pub fn binomial_upper_tail(n: usize, k: usize, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let lp = p.ln();
    let lq = (1.0 - p).ln();
    let mut tail = 0.0;
    for j in k..=n {
        let lt = log_binom(n, j) + j as f64 * lp + (n - j) as f64 * lq;
        tail += lt.exp();
    }
    tail.min(1.0)
}

/// One-sided lower confidence bound for a binomial proportion: the smallest
/// p with P(Bin(n, p) >= k) > alpha. Exact in the Clopper-Pearson sense.
pub fn binomial_lower_bound(successes: usize, trials: usize, alpha: f64) -> f64 {
    assert!(trials > 0 && successes <= trials);
    assert!(alpha > 0.0 && alpha < 1.0);
    if successes == 0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = successes as f64 / trials as f64;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if binomial_upper_tail(trials, successes, mid) > alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided upper confidence bound, by symmetry.
pub fn binomial_upper_bound(successes: usize, trials: usize, alpha: f64) -> f64 {
    1.0 - binomial_lower_bound(trials - successes, trials, alpha)
}

/// Median of a sample; None for an empty slice. Even lengths average the
/// two central order statistics.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_matches_direct_small_case() {
        // Bin(4, 0.5): P(X >= 3) = (4 + 1) / 16
        let t = binomial_upper_tail(4, 3, 0.5);
        assert!((t - 5.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_is_conservative_and_ordered() {
        let lcb = binomial_lower_bound(450, 500, 0.05);
        assert!(lcb < 0.9);
        assert!(lcb > 0.85);
        // touching the bound reproduces the confidence level
        assert!((binomial_upper_tail(500, 450, lcb) - 0.05).abs() < 1e-6);
        // more successes, higher bound
        assert!(binomial_lower_bound(480, 500, 0.05) > lcb);
        // zero successes pin the bound at zero
        assert_eq!(binomial_lower_bound(0, 500, 0.05), 0.0);
    }

    #[test]
    fn upper_bound_mirrors_lower() {
        let u = binomial_upper_bound(50, 500, 0.05);
        let l = binomial_lower_bound(450, 500, 0.05);
        assert!((u + l - 1.0).abs() < 1e-9);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
