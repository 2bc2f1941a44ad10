use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::structure::StructureDistribution;
use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::numeric::poisson_pmf;

/// Cumulative intensity `Λ(x) = ∫_0^x λ(y) dy` of a non-homogeneous Poisson process.
///
/// Implementations must be finite, nondecreasing and satisfy `Λ(0) = 0`.
pub trait CumulativeIntensity: Send + Sync + fmt::Debug {
    fn cumulative(&self, x: f64) -> f64;
    /// Intensity `λ(x)`, the derivative of [`cumulative`](Self::cumulative).
    fn intensity(&self, x: f64) -> f64;
}

/// `Λ(x) = scale · x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawIntensity {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLawIntensity {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        ensure_positive("process.scale", scale)?;
        ensure_positive("process.exponent", exponent)?;
        Ok(Self { scale, exponent })
    }
}

impl CumulativeIntensity for PowerLawIntensity {
    fn cumulative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.scale * x.powf(self.exponent)
        }
    }

    fn intensity(&self, x: f64) -> f64 {
        if x <= 0.0 {
            if self.exponent == 1.0 {
                self.scale
            } else if self.exponent > 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.scale * self.exponent * x.powf(self.exponent - 1.0)
        }
    }
}

/// `λ(x) = base + slope · x` with `base, slope >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearIntensity {
    pub base: f64,
    pub slope: f64,
}

impl LinearIntensity {
    pub fn new(base: f64, slope: f64) -> Result<Self> {
        ensure_nonnegative("process.base", base)?;
        ensure_nonnegative("process.slope", slope)?;
        if base + slope <= 0.0 {
            return Err(Error::invalid(
                "process.base",
                "intensity is identically zero",
            ));
        }
        Ok(Self { base, slope })
    }
}

impl CumulativeIntensity for LinearIntensity {
    fn cumulative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        self.base * x + 0.5 * self.slope * x * x
    }

    fn intensity(&self, x: f64) -> f64 {
        self.base + self.slope * x.max(0.0)
    }
}

/// Seasonal intensity `λ(x) = base + amplitude · sin(2πx / period)`, `|amplitude| <= base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidalIntensity {
    pub base: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl SinusoidalIntensity {
    pub fn new(base: f64, amplitude: f64, period: f64) -> Result<Self> {
        ensure_positive("process.base", base)?;
        ensure_positive("process.period", period)?;
        if !amplitude.is_finite() || amplitude.abs() > base {
            return Err(Error::invalid(
                "process.amplitude",
                format!("|amplitude| must not exceed base {base}, got {amplitude}"),
            ));
        }
        Ok(Self {
            base,
            amplitude,
            period,
        })
    }
}

impl CumulativeIntensity for SinusoidalIntensity {
    fn cumulative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let w = 2.0 * PI / self.period;
        self.base * x + self.amplitude * (1.0 - (w * x).cos()) / w
    }

    fn intensity(&self, x: f64) -> f64 {
        self.base + self.amplitude * (2.0 * PI * x.max(0.0) / self.period).sin()
    }
}

/// Claim-arrival process with the order-statistic property.
#[derive(Debug, Clone)]
pub enum ProcessSpec {
    MixedPoisson(StructureDistribution),
    NonHomogeneousPoisson(Arc<dyn CumulativeIntensity>),
    HomogeneousPoisson { rate: f64 },
}

/// Count pmf truncated by the tail rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    /// `pmf[n] = P[N(t) = n]` for `n = 0..=n_star`.
    pub pmf: Vec<f64>,
    /// `1 - Σ pmf`, the discarded mass.
    pub tail_mass: f64,
    /// Whether the tail fell below epsilon before the cap.
    pub converged: bool,
}

impl CountSeries {
    pub fn n_star(&self) -> usize {
        self.pmf.len() - 1
    }
}

/// Smallest truncation point the tail rule will ever pick.
pub const MIN_TRUNCATION: usize = 10;

impl ProcessSpec {
    pub fn homogeneous(rate: f64) -> Result<Self> {
        ensure_positive("process.rate", rate)?;
        Ok(Self::HomogeneousPoisson { rate })
    }

    pub fn mixed(structure: StructureDistribution) -> Self {
        Self::MixedPoisson(structure)
    }

    pub fn nhpp(intensity: impl CumulativeIntensity + 'static) -> Self {
        Self::NonHomogeneousPoisson(Arc::new(intensity))
    }

    /// Mixing law when the process has property 𝒫 (uniform `F_t`).
    pub fn structure(&self) -> Option<StructureDistribution> {
        match self {
            Self::MixedPoisson(l) => Some(l.clone()),
            Self::HomogeneousPoisson { rate } => {
                Some(StructureDistribution::Degenerate { rate: *rate })
            }
            Self::NonHomogeneousPoisson(_) => None,
        }
    }

    fn check_horizon(t: f64) -> Result<()> {
        ensure_nonnegative("t", t).map(|_| ())
    }

    /// `π_{t,n} = P[N(t) = n]`.
    pub fn count_pmf(&self, t: f64, n: usize) -> Result<f64> {
        Self::check_horizon(t)?;
        match self {
            Self::MixedPoisson(l) => l.count_pmf(t, n),
            Self::HomogeneousPoisson { rate } => Ok(poisson_pmf(rate * t, n)),
            Self::NonHomogeneousPoisson(c) => Ok(poisson_pmf(c.cumulative(t), n)),
        }
    }

    /// `E[N(t)]`.
    pub fn expected_count(&self, t: f64) -> Result<f64> {
        Self::check_horizon(t)?;
        match self {
            Self::MixedPoisson(l) => Ok(l.mean()? * t),
            Self::HomogeneousPoisson { rate } => Ok(rate * t),
            Self::NonHomogeneousPoisson(c) => Ok(c.cumulative(t)),
        }
    }

    /// `E[N(t)^2]`.
    pub fn count_second_moment(&self, t: f64) -> Result<f64> {
        Self::check_horizon(t)?;
        match self {
            Self::MixedPoisson(l) => Ok(l.mean()? * t + l.moment(2)? * t * t),
            Self::HomogeneousPoisson { rate } => Ok(rate * t + (rate * t).powi(2)),
            Self::NonHomogeneousPoisson(c) => {
                let m = c.cumulative(t);
                Ok(m + m * m)
            }
        }
    }

    /// Count pmf up to the smallest `N* >= 10` whose cumulative mass reaches
    /// `1 - tail_epsilon`, never beyond `n_cap`.
    pub fn count_series(&self, t: f64, tail_epsilon: f64, n_cap: usize) -> Result<CountSeries> {
        let mut pmf = Vec::with_capacity(MIN_TRUNCATION + 1);
        let mut cum = 0.0;
        let mut n = 0;
        loop {
            let p = self.count_pmf(t, n)?;
            pmf.push(p);
            cum += p;
            let tail = (1.0 - cum).max(0.0);
            if n >= MIN_TRUNCATION && tail <= tail_epsilon {
                return Ok(CountSeries {
                    pmf,
                    tail_mass: tail,
                    converged: true,
                });
            }
            if n >= n_cap.max(MIN_TRUNCATION) {
                return Ok(CountSeries {
                    pmf,
                    tail_mass: tail,
                    converged: false,
                });
            }
            n += 1;
        }
    }

    /// `F_t(x) = E[N(x)] / E[N(t)]`.
    pub fn os_cdf(&self, t: f64, x: f64) -> Result<f64> {
        ensure_positive("t", t)?;
        if !(0.0..=t).contains(&x) {
            return Err(Error::invalid(
                "x",
                format!("must lie in [0, {t}], got {x}"),
            ));
        }
        match self {
            Self::MixedPoisson(_) | Self::HomogeneousPoisson { .. } => Ok(x / t),
            Self::NonHomogeneousPoisson(c) => {
                let total = c.cumulative(t);
                if total <= 0.0 {
                    return Err(Error::DegenerateProcess(format!(
                        "cumulative intensity vanishes at t = {t}"
                    )));
                }
                Ok((c.cumulative(x) / total).clamp(0.0, 1.0))
            }
        }
    }

    /// `f_t(x)`, the derivative of [`os_cdf`](Self::os_cdf) in `x`.
    pub fn os_density(&self, t: f64, x: f64) -> Result<f64> {
        ensure_positive("t", t)?;
        if !(0.0..=t).contains(&x) {
            return Err(Error::invalid(
                "x",
                format!("must lie in [0, {t}], got {x}"),
            ));
        }
        match self {
            Self::MixedPoisson(_) | Self::HomogeneousPoisson { .. } => Ok(1.0 / t),
            Self::NonHomogeneousPoisson(c) => {
                let total = c.cumulative(t);
                if total <= 0.0 {
                    return Err(Error::DegenerateProcess(format!(
                        "cumulative intensity vanishes at t = {t}"
                    )));
                }
                Ok(c.intensity(x) / total)
            }
        }
    }

    /// Samples `N(t)`: a rate from the mixing law, then a Poisson count.
    pub fn sample_count<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> usize {
        let mean = match self {
            Self::MixedPoisson(l) => l.sample(rng) * t,
            Self::HomogeneousPoisson { rate } => rate * t,
            Self::NonHomogeneousPoisson(c) => c.cumulative(t),
        };
        if mean <= 0.0 || !mean.is_finite() {
            return 0;
        }
        Poisson::new(mean).map_or(0, |d| d.sample(rng) as usize)
    }
}

/// Inverse of `x ↦ Λ(x)/Λ(t)` on `[0, t]`: a 1024-interval monotone grid locates the
/// bracket, bisection refines it to 1e-12 relative.
#[derive(Debug, Clone)]
pub struct NhppInverse {
    intensity: Arc<dyn CumulativeIntensity>,
    horizon: f64,
    total: f64,
    grid_x: Vec<f64>,
    grid_f: Vec<f64>,
}

const INVERSE_GRID: usize = 1024;

impl NhppInverse {
    pub fn new(intensity: Arc<dyn CumulativeIntensity>, t: f64) -> Result<Self> {
        ensure_positive("t", t)?;
        let total = intensity.cumulative(t);
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::DegenerateProcess(format!(
                "cumulative intensity at t = {t} is {total}"
            )));
        }
        let grid_x: Vec<f64> = (0..=INVERSE_GRID)
            .map(|k| t * k as f64 / INVERSE_GRID as f64)
            .collect();
        let mut grid_f: Vec<f64> = grid_x
            .iter()
            .map(|&x| intensity.cumulative(x) / total)
            .collect();
        for k in 1..grid_f.len() {
            if grid_f[k] < grid_f[k - 1] {
                return Err(Error::invalid(
                    "process",
                    format!("cumulative intensity decreases near x = {}", grid_x[k]),
                ));
            }
        }
        grid_f[INVERSE_GRID] = 1.0;
        Ok(Self {
            intensity,
            horizon: t,
            total,
            grid_x,
            grid_f,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Solves `Λ(x)/Λ(t) = u`.
    pub fn invert(&self, u: f64) -> Result<f64> {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return Ok(0.0);
        }
        let k = self
            .grid_f
            .partition_point(|&f| f < u)
            .clamp(1, INVERSE_GRID);
        let (mut lo, mut hi) = (self.grid_x[k - 1], self.grid_x[k]);
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi.max(1e-12 * self.horizon) {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if self.intensity.cumulative(mid) / self.total < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NumericFailure {
            context: "NHPP inversion".into(),
            residual: hi - lo,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_mixture_matches_homogeneous() {
        let h = ProcessSpec::homogeneous(1.7).unwrap();
        let m = ProcessSpec::mixed(StructureDistribution::degenerate(1.7).unwrap());
        for n in 0..=50 {
            let a = h.count_pmf(2.3, n).unwrap();
            let b = m.count_pmf(2.3, n).unwrap();
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300), "n={n}");
        }
        assert_eq!(h.os_cdf(2.0, 0.7).unwrap(), m.os_cdf(2.0, 0.7).unwrap());
    }

    #[test]
    fn poisson_probability_at_zero() {
        let p = ProcessSpec::mixed(StructureDistribution::degenerate(1.0).unwrap());
        assert!((p.count_pmf(1.0, 0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(p.count_pmf(0.0, 0).unwrap(), 1.0);
        assert!((p.count_pmf(1e-300, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nhpp_cdf_is_ratio_of_cumulative_intensity() {
        let p = ProcessSpec::nhpp(PowerLawIntensity::new(1.0, 2.0).unwrap());
        assert!((p.os_cdf(2.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(p.os_cdf(2.0, 2.0).unwrap(), 1.0);
        assert!((p.os_density(2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mixed_cdf_is_uniform() {
        let p = ProcessSpec::mixed(StructureDistribution::gamma(2.0, 1.0).unwrap());
        assert_eq!(p.os_cdf(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(p.os_density(2.0, 1.0).unwrap(), 0.5);
        assert!(p.os_cdf(2.0, 2.5).is_err());
    }

    #[test]
    fn vanishing_intensity_is_degenerate() {
        #[derive(Debug)]
        struct Zero;
        impl CumulativeIntensity for Zero {
            fn cumulative(&self, _: f64) -> f64 {
                0.0
            }
            fn intensity(&self, _: f64) -> f64 {
                0.0
            }
        }
        let p = ProcessSpec::nhpp(Zero);
        assert!(matches!(
            p.os_cdf(1.0, 0.5),
            Err(Error::DegenerateProcess(_))
        ));
    }

    #[test]
    fn truncation_rule() {
        let p = ProcessSpec::homogeneous(1.0).unwrap();
        let s = p.count_series(1.0, 1e-10, 60).unwrap();
        assert!(s.converged);
        assert!(s.n_star() >= MIN_TRUNCATION);
        assert!(s.tail_mass <= 1e-10);
        let shorter = p.count_series(1.0, 1e-10, 5).unwrap();
        assert_eq!(shorter.n_star(), MIN_TRUNCATION);
        let big = ProcessSpec::homogeneous(100.0).unwrap();
        let s = big.count_series(1.0, 1e-10, 60).unwrap();
        assert!(!s.converged);
        assert!(s.tail_mass > 0.9);
    }

    #[test]
    fn nhpp_inverse_recovers_quantiles() {
        let c: Arc<dyn CumulativeIntensity> = Arc::new(PowerLawIntensity::new(1.0, 2.0).unwrap());
        let inv = NhppInverse::new(c, 2.0).unwrap();
        for &u in &[0.0, 0.01, 0.25, 0.5, 0.99, 1.0] {
            let x = inv.invert(u).unwrap();
            assert!((x - 2.0 * u.sqrt()).abs() < 1e-11, "u={u} x={x}");
        }
    }

    #[test]
    fn seasonal_intensity_is_consistent() {
        let s = SinusoidalIntensity::new(2.0, 1.5, 1.0).unwrap();
        let h = 1e-6;
        for &x in &[0.1, 0.4, 0.77] {
            let d = (s.cumulative(x + h) - s.cumulative(x - h)) / (2.0 * h);
            assert!((d - s.intensity(x)).abs() < 1e-6);
        }
        assert!(SinusoidalIntensity::new(1.0, 2.0, 1.0).is_err());
    }
}
