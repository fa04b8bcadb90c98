//! Small statistical helpers shared by the sampler, estimators and tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Pairwise (cascade) summation; the result does not depend on how the input
/// was produced, only on its order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Standard error of the mean of independent values.
pub fn standard_error(values: &[f64]) -> f64 {
    (variance(values) / values.len() as f64).sqrt()
}

/// Splits a series into `n_batches` contiguous batches of equal length,
/// dropping the remainder at the end.
pub fn batches(values: &[f64], n_batches: usize) -> Vec<&[f64]> {
    let n_batches = n_batches.max(1).min(values.len().max(1));
    let m = values.len() / n_batches;
    if m == 0 {
        return vec![values];
    }
    values.chunks_exact(m).take(n_batches).collect()
}

/// Batch-means standard error of a statistic: the spread of the statistic
/// across batches, divided by `sqrt(#batches)`.
pub fn batch_se(batches: &[&[f64]], stat: impl Fn(&[f64]) -> f64) -> f64 {
    let per: Vec<f64> = batches.iter().map(|b| stat(b)).collect();
    standard_error(&per)
}

/// Pearson chi-square goodness-of-fit test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Observed and expected counts after pooling sparse bins.
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
}

impl ChiSquareTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Compares observed counts with probabilities. Trailing bins are pooled
/// until every pooled bin expects at least `min_expected` counts.
pub fn chi_square(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let total_p: f64 = probs.iter().sum();
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, p) in observed.iter().zip(probs) {
        o_acc += *o as f64;
        e_acc += total as f64 * p / total_p;
        if e_acc >= min_expected {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(o), Some(e)) => {
                *o += o_acc;
                *e += e_acc;
            }
            _ => {
                obs.push(o_acc);
                exp.push(e_acc);
            }
        }
    }
    let statistic: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = obs.len().saturating_sub(1);
    let p_value = if df == 0 { 1.0 } else { 1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(statistic) };
    ChiSquareTest { statistic, df, p_value, observed: obs, expected: exp }
}

/// Quantile function of the standard normal distribution.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// One-sided Wilson score lower confidence bound for a binomial proportion.
pub fn wilson_lower(successes: u64, n: u64, confidence: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let z = normal_quantile(confidence);
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).max(0.0)
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic two-sided KS critical value at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_is_accurate() {
        let v = vec![0.1; 100_000];
        assert!((pairwise_sum(&v) - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn variance_of_known_values() {
        assert!((variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(variance(&[2.0; 10]), 0.0);
    }

    #[test]
    fn chi_square_pools_sparse_tail() {
        let t = chi_square(&[50, 30, 15, 4, 1], &[0.5, 0.3, 0.15, 0.04, 0.01], 5.0);
        assert_eq!(t.observed.len(), 4);
        assert!(t.statistic < 1e-12);
        assert!(t.passes(0.01));
    }

    #[test]
    fn wilson_reference() {
        // 80/100 at one-sided 95%, worked by hand with z = 1.6448536
        let lo = wilson_lower(80, 100, 0.95);
        assert!((lo - 0.72670).abs() < 1e-4, "{lo}");
        assert_eq!(wilson_lower(0, 50, 0.99), 0.0);
    }

    #[test]
    fn ks_critical_value() {
        assert!((ks_critical(100, 0.01) - 0.16276).abs() < 1e-4);
    }
}
