use rand::{Rng, RngExt};
use rand_distr::{Distribution, Gamma as GammaSampler};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::numeric::{integrate_adaptive, integrate_half_line, ln_fact, ln_pow, poisson_pmf};

/// Relative tolerance of every `∫ g(λ) dL(λ)` evaluated by adaptive quadrature.
pub const STRUCTURE_REL_TOL: f64 = 1e-12;
const STRUCTURE_ABS_TOL: f64 = 1e-15;
/// Allowed deviation of a tabulated density's total mass from one.
pub const TABULATED_MASS_TOL: f64 = 1e-8;

/// One support point of a finite mixing law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub rate: f64,
    pub prob: f64,
}

/// Mixing law `L(λ)` of the random Poisson rate `Λ`.
///
/// `Gamma` is parameterised by shape `α` and rate `θ`, so `E[Λ] = α / θ`.
/// `TabulatedDensity` is a piecewise-linear density through the `(λ, density)` knots and
/// zero outside them.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureDistribution {
    Degenerate { rate: f64 },
    FiniteAtoms { atoms: Vec<Atom> },
    Gamma { shape: f64, rate: f64 },
    TabulatedDensity { knots: Vec<(f64, f64)> },
}

impl StructureDistribution {
    pub fn degenerate(rate: f64) -> Result<Self> {
        ensure_positive("structure.rate", rate)?;
        Ok(Self::Degenerate { rate })
    }

    pub fn finite_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(rate, prob)| Atom { rate, prob })
            .collect();
        if atoms.is_empty() {
            return Err(Error::invalid(
                "structure.atoms",
                "at least one atom is required",
            ));
        }
        for a in &atoms {
            ensure_positive("structure.rates", a.rate)?;
            ensure_nonnegative("structure.probs", a.prob)?;
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "structure.probs",
                format!("atom probabilities must sum to 1 within 1e-12, got {total}"),
            ));
        }
        Ok(Self::FiniteAtoms { atoms })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        ensure_positive("structure.shape", shape)?;
        ensure_positive("structure.rate", rate)?;
        Ok(Self::Gamma { shape, rate })
    }

    /// Tabulated density whose knots must already integrate to one.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        let mass = validate_knots(&knots)?;
        if (mass - 1.0).abs() > TABULATED_MASS_TOL {
            return Err(Error::invalid(
                "structure.densities",
                format!("tabulated density integrates to {mass}, expected 1"),
            ));
        }
        Ok(Self::TabulatedDensity { knots })
    }

    /// Tabulated density rescaled to unit mass.
    pub fn tabulated_normalized(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        let mass = validate_knots(&knots)?;
        if mass <= 0.0 {
            return Err(Error::invalid(
                "structure.densities",
                "density has zero mass",
            ));
        }
        for k in &mut knots {
            k.1 /= mass;
        }
        Ok(Self::TabulatedDensity { knots })
    }

    /// `E[Λ^k]`.
    pub fn moment(&self, k: u32) -> Result<f64> {
        let kf = f64::from(k);
        match self {
            Self::Degenerate { rate } => Ok(rate.powi(k as i32)),
            Self::FiniteAtoms { atoms } => {
                Ok(atoms.iter().map(|a| a.prob * a.rate.powi(k as i32)).sum())
            }
            Self::Gamma { shape, rate } => {
                Ok((ln_gamma(shape + kf) - ln_gamma(*shape) - kf * rate.ln()).exp())
            }
            Self::TabulatedDensity { .. } => self.integrate(|l| l.powi(k as i32)),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }

    pub fn variance(&self) -> Result<f64> {
        let m = self.moment(1)?;
        Ok((self.moment(2)? - m * m).max(0.0))
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::Degenerate { .. } => true,
            Self::FiniteAtoms { atoms } => atoms.iter().filter(|a| a.prob > 0.0).count() == 1,
            _ => false,
        }
    }

    /// Largest rate with positive mass, if the support is bounded.
    pub fn max_rate(&self) -> Option<f64> {
        match self {
            Self::Degenerate { rate } => Some(*rate),
            Self::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|a| a.prob > 0.0)
                .map(|a| a.rate)
                .reduce(f64::max),
            Self::Gamma { .. } => None,
            Self::TabulatedDensity { knots } => knots.last().map(|k| k.0),
        }
    }

    /// `∫ g(λ) dL(λ)`: exact for point masses, adaptive Gauss–Kronrod otherwise.
    pub fn integrate<G: FnMut(f64) -> f64>(&self, mut g: G) -> Result<f64> {
        self.try_integrate(|l| Ok(g(l)))
    }

    /// Like [`integrate`](Self::integrate) for integrands that can fail.
    pub fn try_integrate<G: FnMut(f64) -> Result<f64>>(&self, mut g: G) -> Result<f64> {
        let value = match self {
            Self::Degenerate { rate } => g(*rate)?,
            Self::FiniteAtoms { atoms } => {
                let mut acc = 0.0;
                for a in atoms.iter().filter(|a| a.prob > 0.0) {
                    acc += a.prob * g(a.rate)?;
                }
                acc
            }
            Self::Gamma { shape, rate } => {
                let (shape, rate) = (*shape, *rate);
                let scale = shape / rate;
                let log_norm = shape * rate.ln() - ln_gamma(shape);
                let mut failure = None;
                let r = integrate_half_line(
                    |x| {
                        let l = scale * x;
                        let log_dens = log_norm + (shape - 1.0) * l.ln() - rate * l;
                        let dens = log_dens.exp();
                        if dens == 0.0 || failure.is_some() {
                            return 0.0;
                        }
                        match g(l) {
                            Ok(v) => v * dens * scale,
                            Err(e) => {
                                failure = Some(e);
                                0.0
                            }
                        }
                    },
                    0.0,
                    STRUCTURE_ABS_TOL,
                    STRUCTURE_REL_TOL,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                check_adaptive(r)?
            }
            Self::TabulatedDensity { knots } => {
                let mut acc = 0.0;
                for w in knots.windows(2) {
                    let ((l0, d0), (l1, d1)) = (w[0], w[1]);
                    if l1 <= l0 || (d0 == 0.0 && d1 == 0.0) {
                        continue;
                    }
                    let mut failure = None;
                    let r = integrate_adaptive(
                        |l| {
                            if failure.is_some() {
                                return 0.0;
                            }
                            let dens = d0 + (d1 - d0) * (l - l0) / (l1 - l0);
                            match g(l) {
                                Ok(v) => v * dens,
                                Err(e) => {
                                    failure = Some(e);
                                    0.0
                                }
                            }
                        },
                        l0,
                        l1,
                        STRUCTURE_ABS_TOL,
                        STRUCTURE_REL_TOL,
                    );
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    acc += check_adaptive(r)?;
                }
                acc
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InfiniteMoment(
                "integrand is infinite on a region of positive mass".into(),
            ))
        }
    }

    /// `∫ (λt)^n / n! e^{-λt} dL(λ)`.
    pub fn count_pmf(&self, t: f64, n: usize) -> Result<f64> {
        if t <= 0.0 {
            return Ok(if n == 0 { 1.0 } else { 0.0 });
        }
        match self {
            Self::Gamma { shape, rate } => {
                let (a, th) = (*shape, *rate);
                let ln_p = ln_gamma(a + n as f64) - ln_gamma(a) - ln_fact(n)
                    + a * (th / (th + t)).ln()
                    + ln_pow((t / (th + t)).ln(), n);
                Ok(ln_p.exp())
            }
            _ => self.integrate(|l| poisson_pmf(l * t, n)),
        }
    }

    /// Draws one rate from the mixing law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Degenerate { rate } => *rate,
            Self::FiniteAtoms { atoms } => {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for a in atoms {
                    cum += a.prob;
                    if u < cum {
                        return a.rate;
                    }
                }
                atoms
                    .iter()
                    .rev()
                    .find(|a| a.prob > 0.0)
                    .map_or(0.0, |a| a.rate)
            }
            Self::Gamma { shape, rate } => GammaSampler::new(*shape, 1.0 / *rate)
                .expect("validated gamma structure")
                .sample(rng),
            Self::TabulatedDensity { knots } => {
                let u: f64 = rng.random();
                tabulated_quantile(knots, u)
            }
        }
    }
}

fn check_adaptive(r: crate::numeric::AdaptiveResult) -> Result<f64> {
    if r.converged {
        Ok(r.value)
    } else if !r.value.is_finite() {
        Err(Error::InfiniteMoment(
            "integrand is infinite on a region of positive mass".into(),
        ))
    } else {
        Err(Error::NumericFailure {
            context: "structure integration".into(),
            residual: r.error,
        })
    }
}

fn validate_knots(knots: &[(f64, f64)]) -> Result<f64> {
    if knots.len() < 2 {
        return Err(Error::invalid(
            "structure.lambdas",
            "tabulated density needs at least two knots",
        ));
    }
    for &(l, d) in knots {
        ensure_nonnegative("structure.lambdas", l)?;
        ensure_nonnegative("structure.densities", d)?;
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid(
            "structure.lambdas",
            "knots must be strictly increasing",
        ));
    }
    Ok(knots
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum())
}

/// Inverse cdf of a piecewise-linear density.
fn tabulated_quantile(knots: &[(f64, f64)], u: f64) -> f64 {
    let mut cum = 0.0;
    for w in knots.windows(2) {
        let ((l0, d0), (l1, d1)) = (w[0], w[1]);
        let h = l1 - l0;
        let mass = 0.5 * (d0 + d1) * h;
        if cum + mass >= u && mass > 0.0 {
            let target = u - cum;
            // ∫_0^s (d0 + slope x) dx = target
            let slope = (d1 - d0) / h;
            let s = if slope.abs() < 1e-300 {
                target / d0
            } else {
                let disc = (d0 * d0 + 2.0 * slope * target).max(0.0);
                2.0 * target / (d0 + disc.sqrt())
            };
            return l0 + s.clamp(0.0, h);
        }
        cum += mass;
    }
    knots.last().map_or(0.0, |k| k.0)
}
