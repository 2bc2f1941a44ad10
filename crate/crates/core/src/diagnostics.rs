//! Goodness-of-fit checks for the simulator.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom (chi-square) or sample size (Kolmogorov–Smirnov).
    pub size: usize,
}

impl TestOutcome {
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// One-sample Kolmogorov–Smirnov test of `samples` against `cdf`.
///
/// The p-value uses the asymptotic Kolmogorov law with Stephens' small-sample
/// correction.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestOutcome> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "must not be empty"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - k as f64 / n).max((k + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    Ok(TestOutcome {
        statistic: d,
        p_value: kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d),
        size: xs.len(),
    })
}

/// `P[K > x]` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// Pearson chi-square test of observed counts against cell probabilities.
///
/// Cells are scanned in order and merged until each pooled cell expects at least
/// `min_expected` observations; whatever mass the probabilities leave out forms a
/// final tail cell.
pub fn chi_square_test(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<TestOutcome> {
    if observed.len() != probs.len() {
        return Err(Error::invalid(
            "probs",
            "must have one probability per observed cell",
        ));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::invalid("observed", "no observations"));
    }
    let n = total as f64;
    let covered: f64 = probs.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probs) {
        o += obs as f64;
        e += p * n;
        if e >= min_expected {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    e += (1.0 - covered).max(0.0) * n;
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) if e < min_expected => {
                last.0 += o;
                last.1 += e;
            }
            _ => cells.push((o, e)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::invalid(
            "observed",
            "too few cells after pooling for a chi-square test",
        ));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = cells.len() - 1;
    let law = ChiSquared::new(df as f64).map_err(|e| Error::invalid("df", e.to_string()))?;
    Ok(TestOutcome {
        statistic: stat,
        p_value: law.sf(stat),
        size: df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_points() {
        // Critical values of the asymptotic law.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.9495) - 0.001).abs() < 1e-5);
    }

    #[test]
    fn ks_accepts_grid_and_rejects_shift() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64 + 0.5) / 1000.0).collect();
        let ok = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(ok.statistic <= 0.0005 + 1e-12);
        assert!(!ok.rejects_at(0.001));
        let bad = ks_test(&xs, |x| (x * x).clamp(0.0, 1.0)).unwrap();
        assert!(bad.rejects_at(0.001));
    }

    #[test]
    fn chi_square_exact_fit() {
        let obs = [250, 500, 250];
        let out = chi_square_test(&obs, &[0.25, 0.5, 0.25], 5.0).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.size, 2);
        assert!((out.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_pools_sparse_tail() {
        let obs = [500, 480, 18, 2, 0];
        let probs = [0.5, 0.48, 0.018, 0.0019, 0.0001];
        let out = chi_square_test(&obs, &probs, 5.0).unwrap();
        assert_eq!(out.size, 2);
    }
}
