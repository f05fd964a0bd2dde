//! Positive-only arithmetic in log space.

use statrs::function::gamma::ln_gamma;

/// `ln(sum(exp(x)))` over terms that are logs of nonnegative numbers.
///
/// `-inf` terms (zeros) are ignored; any `+inf` term makes the sum `+inf`.
pub fn log_sum_exp<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let it = terms.into_iter();
    let max = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let s: f64 = it.map(|t| (t - max).exp()).sum();
    max + s.ln()
}

/// `ln C(n, k)` through log-gamma, so no factorial ever overflows.
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `ln(1 - exp(a))` for `a < 0`.
pub fn ln_one_minus_exp(a: f64) -> f64 {
    (-a.exp_m1()).ln()
}
