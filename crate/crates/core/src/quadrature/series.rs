use super::{Evaluation, QuadratureConfig};
use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::model::MIN_TRUNCATION;
use crate::numeric::{poisson_pmf, KahanSum};

/// `E[h(N)]` for `N ~ Poisson(λs)`, summed until the remaining mass drops below
/// the configured tail epsilon.
///
/// The residual bound is the discarded mass times the largest `|h|` seen near the
/// cut, which is adequate for the polynomially growing `h` used here.
pub fn poisson_functional_expectation<H: Fn(usize) -> f64>(
    lambda: f64,
    s: f64,
    h: H,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    ensure_positive("lambda", lambda)?;
    ensure_nonnegative("s", s)?;
    let mu = lambda * s;
    let (value, tail, n_star) = poisson_series(mu, &h, cfg.tail_epsilon)?;
    let envelope = h(n_star).abs().max(h(n_star + 1).abs());
    Ok(Evaluation {
        value,
        residual_bound: 2.0 * tail * envelope,
        n_star,
        qmc_stderr: None,
    })
}

/// Returns `(Σ_{n ≤ N*} P[N=n] h(n), discarded mass, N*)`.
pub(super) fn poisson_series<H: Fn(usize) -> f64>(
    mu: f64,
    h: &H,
    tail_epsilon: f64,
) -> Result<(f64, f64, usize)> {
    let hard_cap = (mu + 40.0 * mu.sqrt() + 200.0) as usize;
    let mut acc = KahanSum::new();
    let mut mass = KahanSum::new();
    let mut n = 0;
    loop {
        let p = poisson_pmf(mu, n);
        if p > 0.0 {
            acc.add(p * h(n));
            mass.add(p);
        }
        let tail = (1.0 - mass.value()).max(0.0);
        if n >= MIN_TRUNCATION && n as f64 >= mu && tail <= tail_epsilon {
            return Ok((acc.value(), tail, n));
        }
        if n >= hard_cap {
            return Err(Error::NonConvergence {
                context: format!("Poisson functional with mean {mu}"),
                residual: tail,
            });
        }
        n += 1;
    }
}

/// Partial sums `Σ_{i ≤ k} s_i` and `Σ_{i ≤ k} s_i²` of the per-claim scale factors,
/// extended past the table with the last factor.
#[derive(Debug, Clone)]
pub(super) struct ScaleSums {
    first: Vec<f64>,
    second: Vec<f64>,
    last: f64,
}

impl ScaleSums {
    pub(super) fn new(scale: impl Fn(usize) -> f64, table_len: usize) -> Self {
        let len = table_len.max(1);
        let mut first = vec![0.0];
        let mut second = vec![0.0];
        for i in 1..=len {
            let s = scale(i);
            first.push(first[i - 1] + s);
            second.push(second[i - 1] + s * s);
        }
        Self {
            first,
            second,
            last: scale(len),
        }
    }

    pub(super) fn first(&self, k: usize) -> f64 {
        let len = self.first.len() - 1;
        if k <= len {
            self.first[k]
        } else {
            self.first[len] + (k - len) as f64 * self.last
        }
    }

    pub(super) fn second(&self, k: usize) -> f64 {
        let len = self.second.len() - 1;
        if k <= len {
            self.second[k]
        } else {
            self.second[len] + (k - len) as f64 * self.last * self.last
        }
    }

    /// `Σ_{i≠j ≤ k} s_i s_j`.
    pub(super) fn cross(&self, k: usize) -> f64 {
        self.first(k).powi(2) - self.second(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_mean() {
        let cfg = QuadratureConfig::default();
        let e = poisson_functional_expectation(2.0, 1.5, |n| n as f64, &cfg).unwrap();
        assert!((e.value - 3.0).abs() <= e.residual_bound + 1e-14);
    }

    #[test]
    fn rising_factorial_closed_form() {
        let cfg = QuadratureConfig::default();
        for &(l, s) in &[(1.0, 0.3), (2.0, 4.0), (0.5, 10.0)] {
            let e =
                poisson_functional_expectation(l, s, |n| ((n + 2) * (n + 1)) as f64, &cfg).unwrap();
            let m: f64 = l * s;
            assert!((e.value - ((m + 2.0).powi(2) - 2.0)).abs() < 1e-9 * e.value);
        }
    }

    #[test]
    fn second_moment_of_unit_poisson() {
        let cfg = QuadratureConfig::default();
        let e = poisson_functional_expectation(1.0, 1.0, |n| (n * n) as f64, &cfg).unwrap();
        assert!((e.value - 2.0).abs() <= e.residual_bound + 1e-14);
        assert!(e.residual_bound < 1e-7);
    }

    #[test]
    fn zero_mean_is_h_of_zero() {
        let cfg = QuadratureConfig::default();
        let e = poisson_functional_expectation(1.0, 0.0, |n| 3.0 + n as f64, &cfg).unwrap();
        assert_eq!(e.value, 3.0);
    }

    #[test]
    fn scale_sums_extend() {
        let s = ScaleSums::new(|i| if i == 1 { 2.0 } else { 1.0 }, 2);
        assert_eq!(s.first(1), 2.0);
        assert_eq!(s.first(4), 5.0);
        assert_eq!(s.second(4), 7.0);
        assert_eq!(s.cross(2), 9.0 - 5.0);
    }
}
