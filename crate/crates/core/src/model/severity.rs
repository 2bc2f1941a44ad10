use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, LogNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_finite, ensure_nonnegative, ensure_positive, Error, Result};

/// Nonnegative claim-size distribution.
///
/// `Pareto` is the Lomax (Pareto type II) law with support `[0, ∞)`:
/// `F(x) = 1 - (scale / (x + scale))^shape`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeverityLaw {
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Pareto { shape: f64, scale: f64 },
    PointMass { value: f64 },
}

impl SeverityLaw {
    pub fn exponential(mean: f64) -> Result<Self> {
        Self::Exponential { mean }.validated()
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::Gamma { shape, scale }.validated()
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::Lognormal { mu, sigma }.validated()
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        Self::Pareto { shape, scale }.validated()
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::PointMass { value }.validated()
    }

    /// Checks the parameter ranges and returns `self` unchanged.
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Exponential { mean } => {
                ensure_positive("severity.mean", mean)?;
            }
            Self::Gamma { shape, scale } => {
                ensure_positive("severity.shape", shape)?;
                ensure_positive("severity.scale", scale)?;
            }
            Self::Lognormal { mu, sigma } => {
                ensure_finite("severity.mu", mu)?;
                ensure_positive("severity.sigma", sigma)?;
            }
            Self::Pareto { shape, scale } => {
                ensure_positive("severity.shape", shape)?;
                ensure_positive("severity.scale", scale)?;
            }
            Self::PointMass { value } => {
                ensure_nonnegative("severity.value", value)?;
            }
        }
        Ok(self)
    }

    /// Raw moment `E[Y^k]`; `InfiniteMoment` when it diverges (Pareto with `shape <= k`).
    pub fn moment(&self, k: u32) -> Result<f64> {
        let kf = f64::from(k);
        let value = match *self {
            Self::Exponential { mean } => (ln_gamma(kf + 1.0) + kf * mean.ln()).exp(),
            Self::Gamma { shape, scale } => {
                (ln_gamma(shape + kf) - ln_gamma(shape) + kf * scale.ln()).exp()
            }
            Self::Lognormal { mu, sigma } => (kf * mu + 0.5 * kf * kf * sigma * sigma).exp(),
            Self::Pareto { shape, scale } => {
                if shape <= kf {
                    return Err(Error::InfiniteMoment(format!(
                        "Pareto moment of order {k} needs shape > {k}, got {shape}"
                    )));
                }
                (kf * scale.ln() + ln_gamma(kf + 1.0) + ln_gamma(shape - kf) - ln_gamma(shape))
                    .exp()
            }
            Self::PointMass { value } => value.powi(k as i32),
        };
        if k == 0 {
            return Ok(1.0);
        }
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InfiniteMoment(format!(
                "moment of order {k} overflows for {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { mean } => -(-x / mean).exp_m1(),
            Self::Gamma { shape, scale } => statrs::function::gamma::gamma_lr(shape, x / scale),
            Self::Lognormal { mu, sigma } => {
                if x == 0.0 {
                    0.0
                } else {
                    LogNormal::new(mu, sigma).expect("validated").cdf(x)
                }
            }
            Self::Pareto { shape, scale } => 1.0 - (scale / (x + scale)).powf(shape),
            Self::PointMass { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Quantile function; `u` is clamped into `[0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0 - f64::EPSILON);
        match *self {
            Self::Exponential { mean } => -mean * (-u).ln_1p(),
            Self::Gamma { shape, scale } => {
                if u == 0.0 {
                    0.0
                } else {
                    GammaDist::new(shape, 1.0 / scale)
                        .expect("validated")
                        .inverse_cdf(u)
                }
            }
            Self::Lognormal { mu, sigma } => {
                if u == 0.0 {
                    0.0
                } else {
                    LogNormal::new(mu, sigma).expect("validated").inverse_cdf(u)
                }
            }
            Self::Pareto { shape, scale } => scale * ((-(-u).ln_1p() / shape).exp_m1()),
            Self::PointMass { value } => value,
        }
    }
}
