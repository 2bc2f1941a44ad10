//! Quadrature rules, log-space combinatorics and compensated summation shared by
//! every engine.

mod adaptive;
mod gauss_legendre;
mod sum;

pub use adaptive::{integrate_adaptive, integrate_half_line, AdaptiveResult};
pub use gauss_legendre::GaussLegendre;
pub use sum::{pairwise_sum, KahanSum};

use statrs::function::factorial::ln_factorial;

/// `ln(n!)`.
#[inline]
pub fn ln_fact(n: usize) -> f64 {
    ln_factorial(n as u64)
}

/// `k * ln(p)` with the convention `0^0 = 1`.
#[inline]
pub fn ln_pow(ln_p: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_p
    }
}

/// Natural log that maps non-positive arguments to `-inf` instead of NaN.
#[inline]
pub fn ln_clamped(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Poisson probability `P[N = n]` for mean `mu`, evaluated in log space.
pub fn poisson_pmf(mu: f64, n: usize) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (ln_pow(mu.ln(), n) - mu - ln_fact(n)).exp()
}

/// `e^{-z} - 1 + z`, accurate for small `z`.
pub fn exp_remainder1(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // sum_{k>=2} (-z)^k / k!
        let mut term = z * z / 2.0;
        let mut acc: f64 = 0.0;
        let mut k = 2.0;
        while term.abs() > 1e-18 * acc.abs().max(f64::MIN_POSITIVE) {
            acc += term;
            k += 1.0;
            term *= -z / k;
        }
        acc
    } else {
        (-z).exp_m1() + z
    }
}

/// `1 - e^{-z}(1 + z)`, accurate for small `z`.
pub fn exp_remainder2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // sum_{k>=2} (-1)^k (k-1) z^k / k!
        let mut pow = z * z / 2.0;
        let mut acc = 0.0;
        let mut k = 2.0_f64;
        loop {
            let term = (k - 1.0) * pow;
            acc += term;
            if term.abs() <= 1e-18 * acc.abs() {
                break;
            }
            k += 1.0;
            pow *= -z / k;
        }
        acc
    } else {
        -(-z).exp_m1() - z * (-z).exp()
    }
}
