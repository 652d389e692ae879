//! Statistical test helpers used by the verification reports and the audit
//! harness: Kolmogorov-Smirnov tests, a chi-square uniformity test, and
//! Wilson score intervals.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::ToString;

use crate::special::{kolmogorov_sf, regularized_gamma_q};
use crate::{Error, Result};

/// Outcome of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sort_unstable_f64(v: &mut [f64]) {
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
}

fn ks_p_value(statistic: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic)
}

/// One-sample two-sided KS test of `samples` against the fully specified
/// CDF `cdf`. The sample vector is sorted in place.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    ks_one_sample_windowed(samples, cdf, f64::NEG_INFINITY, f64::INFINITY)
}

/// One-sample KS test with the supremum restricted to `[lo, hi]`.
///
/// Used when the sampler has a resolution floor: values that the sampler can
/// only represent up to an additive truncation are compared at a coarser
/// scale instead of at full floating-point resolution.
pub fn ks_one_sample_windowed(
    samples: &mut [f64],
    cdf: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> KsResult {
    sort_unstable_f64(samples);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        if x < lo || x > hi {
            continue;
        }
        let f = cdf(x);
        let d_plus = (i as f64 + 1.0) / n - f;
        let d_minus = f - i as f64 / n;
        d = d.max(d_plus).max(d_minus);
    }
    // window edges, using the empirical CDF just below/at the edge
    for edge in [lo, hi] {
        if edge.is_finite() {
            let rank = samples.partition_point(|&x| x <= edge) as f64;
            d = d.max((rank / n - cdf(edge)).abs());
        }
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample two-sided KS test. Both sample vectors are sorted in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> KsResult {
    sort_unstable_f64(a);
    sort_unstable_f64(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let xa = a[i];
        let xb = b[j];
        let x = xa.min(xb);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
    }
}

/// Chi-square goodness-of-fit test of `counts` against the uniform
/// distribution over the cells. Returns `(statistic, p_value)`.
pub fn chi_square_uniform(counts: &[u64]) -> Result<(f64, f64)> {
    if counts.len() < 2 {
        return Err(Error::InvalidConfig(
            "chi-square test needs at least 2 cells".to_string(),
        ));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidConfig(
            "chi-square test needs at least one observation".to_string(),
        ));
    }
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = (counts.len() - 1) as f64;
    let p = regularized_gamma_q(dof / 2.0, stat / 2.0)?;
    Ok((stat, p))
}

/// Wilson score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WilsonInterval {
    pub low: f64,
    pub high: f64,
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> WilsonInterval {
    if trials == 0 {
        return WilsonInterval { low: 0.0, high: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    WilsonInterval {
        low: ((center - spread) / denom).max(0.0),
        high: ((center + spread) / denom).min(1.0),
    }
}

/// Standard error of a binomial proportion estimate at rate `p`.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn ks_one_sample_accepts_uniform() {
        let mut rng = crate::trial_rng(101, 0);
        let mut xs: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let r = ks_one_sample(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(r.p_value > 0.01, "p = {}", r.p_value);
    }

    #[test]
    fn ks_one_sample_rejects_shifted() {
        let mut rng = crate::trial_rng(102, 0);
        let mut xs: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>().powi(2)).collect();
        let r = ks_one_sample(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(r.p_value < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn ks_two_sample_same_and_different() {
        let mut rng = crate::trial_rng(103, 0);
        let mut a: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let mut b: Vec<f64> = (0..12_000).map(|_| rng.gen::<f64>()).collect();
        let same = ks_two_sample(&mut a, &mut b);
        assert!(same.p_value > 0.01, "p = {}", same.p_value);
        let mut c: Vec<f64> = (0..12_000).map(|_| 0.8 * rng.gen::<f64>()).collect();
        let diff = ks_two_sample(&mut a, &mut c);
        assert!(diff.p_value < 1e-6, "p = {}", diff.p_value);
    }

    #[test]
    fn ks_two_sample_handles_ties() {
        // atoms on both sides must not blow up the statistic
        let mut a: Vec<f64> = core::iter::repeat(0.0).take(500).chain((0..500).map(|i| i as f64 / 500.0)).collect();
        let mut b: Vec<f64> = core::iter::repeat(0.0).take(500).chain((0..500).map(|i| i as f64 / 500.0)).collect();
        let r = ks_two_sample(&mut a, &mut b);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn chi_square_uniform_sane() {
        let (stat, p) = chi_square_uniform(&[250, 250, 250, 250]).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, p) = chi_square_uniform(&[400, 100, 250, 250]).unwrap();
        assert!(p < 1e-6);
        let mut rng = crate::trial_rng(104, 0);
        let mut counts = [0u64; 4];
        for _ in 0..10_000 {
            counts[rng.gen_range(0..4)] += 1;
        }
        let (_, p) = chi_square_uniform(&counts).unwrap();
        assert!(p > 1e-3, "p = {p}");
    }

    #[test]
    fn wilson_interval_reference() {
        // scipy.stats reference: wilson CI for 18/20 at z=1.96 is
        // (0.6989664, 0.9721335)
        let w = wilson_interval(18, 20, 1.959_963_984_540_054);
        assert!((w.low - 0.698_966_4).abs() < 1e-6, "low {}", w.low);
        assert!((w.high - 0.972_133_5).abs() < 1e-6, "high {}", w.high);
        // degenerate ends stay inside [0,1]
        let w0 = wilson_interval(0, 20, 1.96);
        assert_eq!(w0.low, 0.0);
        assert!(w0.high > 0.0 && w0.high < 0.3);
        let w1 = wilson_interval(20, 20, 1.96);
        assert!((w1.high - 1.0).abs() < 1e-12);
        assert!(w1.low > 0.7);
    }

    #[test]
    fn wilson_interval_binomial_coverage() {
        // exhaustive binomial check for all n <= 20: coverage of the 95%
        // Wilson interval stays above 90% on a probability grid
        fn binom_pmf(n: u64, k: u64, p: f64) -> f64 {
            let mut log = 0.0;
            for i in 0..k {
                log += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
            }
            (log + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
        }
        let z = 1.959_963_984_540_054;
        for n in 1..=20u64 {
            for pi in 1..20 {
                let p = pi as f64 / 20.0;
                let mut coverage = 0.0;
                for k in 0..=n {
                    let w = wilson_interval(k, n, z);
                    if w.low <= p && p <= w.high {
                        coverage += binom_pmf(n, k, p);
                    }
                }
                // the nominal-95% Wilson interval dips below nominal for
                // tiny n; its exact floor on this grid is 0.80 at n=1 and
                // about 0.898 from n=5 on
                let floor = if n >= 5 { 0.89 } else { 0.79 };
                assert!(coverage > floor, "coverage {coverage} at n={n}, p={p}");
            }
        }
    }

    #[test]
    fn mean_and_se_basic() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-12);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
