//! Numerical evaluation of the general series-of-integrals representations of
//! `E[S(t)]` and `E[S(t)²]`.
//!
//! * [`mean_theorem1`] / [`second_theorem2`]: any order-statistic process, integrating
//!   against `F_t`, `f_t` in arrival-time coordinates.
//! * [`mean_theorem3`] / [`second_theorem5`]: mixed Poisson, `(previous arrival,
//!   inter-claim time)` coordinates on the unit simplex.
//! * [`mean_theorem4`] / [`second_theorem6`]: mixed Poisson with claims depending on
//!   the inter-claim time only, as Poisson functionals integrated against `L`.
//! * [`second_theorem2_joint`]: user-supplied product expectations `E[X_i X_j | …]`.

mod density;
mod general;
mod interarrival;
mod joint;
mod mixed;
mod series;

use std::sync::Arc;

pub use density::{DensityKind, OrderStatDensity};
pub use general::{mean_theorem1, second_theorem2};
pub use interarrival::{mean_theorem4, second_theorem6};
pub use joint::{second_theorem2_joint, FactorizedJoint, JointMoments, JOINT_TENSOR_MAX_N};
pub use mixed::{mean_theorem3, second_theorem5};
pub use series::poisson_functional_expectation;

use crate::error::{ensure_nonnegative, Error, Result};
use crate::model::{CumulativeIntensity, MomentKernel, ProcessSpec};
use crate::numeric::ln_fact;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss–Legendre order per axis for the nested rules.
    pub nodes_per_axis: usize,
    /// Count-series truncation: stop once the discarded pmf mass is below this.
    pub tail_epsilon: f64,
    /// Largest count the series may reach before reporting non-convergence.
    pub n_cap: usize,
    /// Highest integral dimension evaluated by tensor quadrature on the joint path.
    pub dim_cap: usize,
    /// Quasi-Monte Carlo points for joint-path terms beyond the tensor range.
    pub mc_fallback_samples: usize,
    /// Gauss–Legendre order per axis for the four-dimensional joint-path tensor rule.
    pub tensor4_nodes: usize,
    /// Seed of the random shifts applied to the quasi-Monte Carlo point set.
    pub qmc_seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_axis: 64,
            tail_epsilon: 1e-10,
            n_cap: 60,
            dim_cap: 4,
            mc_fallback_samples: 200_000,
            tensor4_nodes: 16,
            qmc_seed: 0x0051_ae5e_ed00,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 8 {
            return Err(Error::invalid("quadrature.nodes", "must be at least 8"));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1e-3) {
            return Err(Error::invalid(
                "quadrature.tail_epsilon",
                "must lie in (0, 1e-3)",
            ));
        }
        if self.n_cap < 10 {
            return Err(Error::invalid("quadrature.n_cap", "must be at least 10"));
        }
        if !(1..=4).contains(&self.dim_cap) {
            return Err(Error::invalid("quadrature.dim_cap", "must lie in 1..=4"));
        }
        if self.mc_fallback_samples < 1000 {
            return Err(Error::invalid(
                "quadrature.mc_samples",
                "must be at least 1000",
            ));
        }
        if self.tensor4_nodes < 4 {
            return Err(Error::invalid(
                "quadrature.tensor4_nodes",
                "must be at least 4",
            ));
        }
        Ok(())
    }
}

/// Result of one quadrature engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Upper bound on the contribution of the discarded count-series tail.
    pub residual_bound: f64,
    /// Truncation point `N*` of the count series (0 when no series was needed).
    pub n_star: usize,
    /// Standard error of the quasi-Monte Carlo share of the value, if any.
    pub qmc_stderr: Option<f64>,
}

impl Evaluation {
    fn zero() -> Self {
        Self {
            value: 0.0,
            residual_bound: 0.0,
            n_star: 0,
            qmc_stderr: None,
        }
    }
}

fn check_horizon(t: f64) -> Result<()> {
    ensure_nonnegative("t", t)?;
    if t.is_infinite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    Ok(())
}

/// Arrival-time law `F_t`, `f_t` on `[0, t]`.
#[derive(Debug, Clone)]
enum OsLaw {
    Uniform {
        t: f64,
    },
    Intensity {
        c: Arc<dyn CumulativeIntensity>,
        total: f64,
    },
}

impl OsLaw {
    fn new(process: &ProcessSpec, t: f64) -> Result<Self> {
        match process {
            ProcessSpec::NonHomogeneousPoisson(c) => {
                let total = c.cumulative(t);
                if !(total > 0.0 && total.is_finite()) {
                    return Err(Error::DegenerateProcess(format!(
                        "cumulative intensity at t = {t} is {total}"
                    )));
                }
                Ok(Self::Intensity {
                    c: Arc::clone(c),
                    total,
                })
            }
            _ => Ok(Self::Uniform { t }),
        }
    }

    #[inline]
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { t } => (x / t).clamp(0.0, 1.0),
            Self::Intensity { c, total } => (c.cumulative(x) / total).clamp(0.0, 1.0),
        }
    }

    #[inline]
    fn density(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { t } => 1.0 / t,
            Self::Intensity { c, total } => c.intensity(x) / total,
        }
    }
}

/// `ω_n = π_{t,n} · n!` for `n ≤ N*`, with the tail moments needed for error bounds.
#[derive(Debug, Clone)]
struct CountWeights {
    omega: Vec<f64>,
    /// `E[N; N > N*]`
    tail_first: f64,
    /// `E[N²; N > N*]`
    tail_second: f64,
}

impl CountWeights {
    fn new(process: &ProcessSpec, t: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let series = process.count_series(t, cfg.tail_epsilon, cfg.n_cap)?;
        if !series.converged {
            return Err(Error::NonConvergence {
                context: format!(
                    "count series at t = {t} (cap n = {}, remaining mass {:e})",
                    cfg.n_cap, series.tail_mass
                ),
                residual: series.tail_mass,
            });
        }
        let omega = series
            .pmf
            .iter()
            .enumerate()
            .map(|(n, &p)| p * ln_fact(n).exp())
            .collect();
        let head1: f64 = series
            .pmf
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum();
        let head2: f64 = series
            .pmf
            .iter()
            .enumerate()
            .map(|(n, p)| (n * n) as f64 * p)
            .sum();
        Ok(Self {
            omega,
            tail_first: (process.expected_count(t)? - head1).max(0.0),
            tail_second: (process.count_second_moment(t)? - head2).max(0.0),
        })
    }

    fn n_star(&self) -> usize {
        self.omega.len() - 1
    }

    /// `ω_n`, zero beyond the truncation point.
    #[inline]
    fn at(&self, n: usize) -> f64 {
        self.omega.get(n).copied().unwrap_or(0.0)
    }
}

/// `s_i^power` for `i = 0..=n` (index 0 unused).
fn scale_table(kernel: &MomentKernel<'_>, n: usize, power: i32) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                kernel.scale(i).powi(power)
            }
        })
        .collect()
}

/// `x^k / k!` for `k = 0..=n`.
#[inline]
fn scaled_powers(x: f64, n: usize, out: &mut Vec<f64>) {
    out.clear();
    let mut p = 1.0;
    out.push(p);
    for k in 1..=n {
        p *= x / k as f64;
        out.push(p);
    }
}

/// Envelope for the discarded tail of a second-moment series.
fn second_envelope(kernel: &MomentKernel<'_>) -> f64 {
    kernel.second_bound().max(kernel.mean_bound().powi(2))
}
