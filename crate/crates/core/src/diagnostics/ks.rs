//! One-sample Kolmogorov–Smirnov test against a Gaussian.

use serde::Serialize;

use super::normal::normal_cdf;
use crate::error::{Result, UrnError};

/// Terms kept in the Kolmogorov survival series.
pub const KOLMOGOROV_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `sup_x |F_n(x) - cdf(x)|` over the empirical CDF of `samples`.
pub fn ks_statistic<C: Fn(f64) -> f64>(samples: &[f64], cdf: C) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// `P(K > lambda)` for the Kolmogorov distribution,
/// `2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`, truncated at
/// [`KOLMOGOROV_TERMS`] terms and clipped to `[0, 1]`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    // The alternating series has not converged for small lambda, where the
    // survival probability is within 1e-12 of 1.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=KOLMOGOROV_TERMS {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `samples` against `N(mean, variance)` with the asymptotic
/// p-value at `lambda = sqrt(n) * D`.
pub fn ks_test(samples: &[f64], mean: f64, variance: f64) -> Result<KsResult> {
    if samples.len() < 8 {
        return Err(UrnError::Usage(format!("KS test needs at least 8 samples, got {}", samples.len())));
    }
    if !(variance > 0.0 && variance.is_finite()) || !mean.is_finite() {
        return Err(UrnError::Usage(format!(
            "KS reference needs finite mean and positive variance, got N({mean}, {variance})"
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(UrnError::Usage("KS samples must be finite".into()));
    }
    let statistic = ks_statistic(samples, |x| normal_cdf(x, mean, variance));
    let n = samples.len();
    Ok(KsResult { statistic, p_value: kolmogorov_survival((n as f64).sqrt() * statistic), n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::normal::standard_normal_cdf;
    use crate::rng::{RandomStream, Xoshiro256PlusPlus};

    /// Direct double loop over the empirical CDF and its left limits.
    fn brute_force_d(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let n = samples.len() as f64;
        let mut d: f64 = 0.0;
        for &x in samples {
            let at = samples.iter().filter(|&&y| y <= x).count() as f64 / n;
            let left = samples.iter().filter(|&&y| y < x).count() as f64 / n;
            let f = cdf(x);
            d = d.max((at - f).abs()).max((left - f).abs());
        }
        d
    }

    fn quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if standard_normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_samples_fit_closely() {
        let n = 1000;
        let xs: Vec<f64> = (1..=n).map(|i| quantile(i as f64 / (n + 1) as f64)).collect();
        let r = ks_test(&xs, 0.0, 1.0).unwrap();
        assert!(r.statistic < 0.002, "{}", r.statistic);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn shifted_samples_are_rejected() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let xs: Vec<f64> = (0..500).map(|_| rng.standard_normal() + 5.0).collect();
        assert!(ks_test(&xs, 0.0, 1.0).unwrap().p_value < 1e-6);
    }

    #[test]
    fn matches_brute_force_on_small_samples() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(17);
        for n in [8usize, 13, 50, 200] {
            let mut xs: Vec<f64> = (0..n).map(|_| 0.3 + 1.7 * rng.standard_normal()).collect();
            // ties exercise the jump handling
            xs[1] = xs[0];
            xs[3] = xs[2];
            let cdf = |x: f64| normal_cdf(x, 0.3, 1.7 * 1.7);
            let fast = ks_statistic(&xs, cdf);
            let slow = brute_force_d(&xs, cdf);
            assert!((fast - slow).abs() <= 1e-15, "n={n}: {fast} vs {slow}");
        }
    }

    #[test]
    fn kolmogorov_survival_known_points() {
        // classical critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(10.0) < 1e-80);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(ks_test(&[0.0; 5], 0.0, 1.0).is_err());
        assert!(ks_test(&[0.0; 10], 0.0, 0.0).is_err());
        assert!(ks_test(&[f64::NAN; 10], 0.0, 1.0).is_err());
    }
}
