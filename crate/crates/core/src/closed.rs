//! Closed-form moments of `S(t)` for mixed Poisson arrivals and the
//! exponential-mixture dependence `P[X ≤ y | V = v] = (1−e^{−βv})H_ℓ(y) + e^{−βv}H_s(y)`.

use crate::error::{ensure_nonnegative, Error, Result};
use crate::model::{DependenceModel, SeverityLaw, StructureDistribution};
use crate::special_forms::{frak_a_complement, frak_a_raw, frak_b, FrakBParams};

/// Which engine produced a [`MomentReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Closed,
    Quadrature,
    Simulation,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Quadrature => "quadrature",
            Method::Simulation => "simulate",
        }
    }
}

/// The five weighted integrals making up the closed-form second moment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondMomentTerms {
    /// `E[Y_ℓ²] ∫ (λt − 𝔄) dL`
    pub large_square: f64,
    /// `E[Y_s²] ∫ 𝔄 dL`
    pub small_square: f64,
    /// `(E[Y_ℓ])² ∫ (𝔅(0,0) − 2𝔅(0,β) + 𝔅(β,β)) dL`
    pub large_large: f64,
    /// `2E[Y_ℓ]E[Y_s] ∫ (𝔅(0,β) − 𝔅(β,β)) dL`
    pub large_small: f64,
    /// `(E[Y_s])² ∫ 𝔅(β,β) dL`
    pub small_small: f64,
}

impl SecondMomentTerms {
    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.large_square,
            self.small_square,
            self.large_large,
            self.large_small,
            self.small_small,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub t: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub method: Method,
    pub terms: Option<SecondMomentTerms>,
}

impl MomentReport {
    /// Builds a report, rejecting a variance more negative than rounding allows.
    pub fn new(t: f64, mean: f64, second_moment: f64, method: Method) -> Result<Self> {
        let variance = second_moment - mean * mean;
        if variance < -1e-9 * second_moment.abs() || !variance.is_finite() {
            return Err(Error::NumericFailure {
                context: format!("{} variance at t = {t}", method.name()),
                residual: variance,
            });
        }
        Ok(Self {
            t,
            mean,
            second_moment,
            variance,
            method,
            terms: None,
        })
    }
}

/// Mixture parameters `(β, Y_ℓ, Y_s)`; an independent model is the `β = 0` case.
fn mixture(dep: &DependenceModel) -> Result<(f64, &SeverityLaw, &SeverityLaw)> {
    match dep {
        DependenceModel::ExponentialMixture { beta, large, small } => Ok((*beta, large, small)),
        DependenceModel::Independent(law) => Ok((0.0, law, law)),
        _ => Err(Error::Precondition(
            "closed forms need the exponential-mixture or independent dependence model".into(),
        )),
    }
}

/// Zero outside `λ > 0`, where every 𝔄/𝔅 integrand vanishes.
fn guard(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> f64 {
    move |l| if l > 0.0 { f(l) } else { 0.0 }
}

fn check_time(t: f64) -> Result<()> {
    ensure_nonnegative("t", t)?;
    if t.is_infinite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    Ok(())
}

/// `E[S(t)] = E[Y_ℓ] ∫(λt − 𝔄) dL + E[Y_s] ∫𝔄 dL`.
pub fn mean_closed(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
) -> Result<f64> {
    check_time(t)?;
    let (beta, large, small) = mixture(dep)?;
    let (ml, ms) = (large.moment(1)?, small.moment(1)?);
    if t == 0.0 {
        return Ok(0.0);
    }
    structure.integrate(|l| {
        if l <= 0.0 {
            return 0.0;
        }
        ml * frak_a_complement(t, l, beta) + ms * frak_a_raw(t, l, beta)
    })
}

/// The mean for a homogeneous Poisson process with rate `λ`.
pub fn mean_closed_homogeneous(t: f64, lambda: f64, dep: &DependenceModel) -> Result<f64> {
    check_time(t)?;
    crate::error::ensure_positive("lambda", lambda)?;
    let (beta, large, small) = mixture(dep)?;
    let (ml, ms) = (large.moment(1)?, small.moment(1)?);
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(ml * frak_a_complement(t, lambda, beta) + ms * frak_a_raw(t, lambda, beta))
}

/// `E[S²(t)]` split into its five weighted integrals.
pub fn second_moment_terms(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
) -> Result<SecondMomentTerms> {
    check_time(t)?;
    let (beta, large, small) = mixture(dep)?;
    let (ml, ms) = (large.moment(1)?, small.moment(1)?);
    let (ql, qs) = (large.moment(2)?, small.moment(2)?);
    if t == 0.0 {
        return Ok(SecondMomentTerms::default());
    }
    let b = |l: f64, th: f64, de: f64| {
        frak_b(FrakBParams {
            t,
            lambda: l,
            theta: th,
            delta: de,
        })
    };

    let complement = structure.integrate(guard(|l| frak_a_complement(t, l, beta)))?;
    let a = structure.integrate(guard(|l| frak_a_raw(t, l, beta)))?;
    let (ll, ls, ss) = if beta == 0.0 {
        (0.0, 0.0, structure.integrate(guard(|l| b(l, 0.0, 0.0)))?)
    } else {
        (
            structure.integrate(guard(|l| {
                b(l, 0.0, 0.0) - 2.0 * b(l, 0.0, beta) + b(l, beta, beta)
            }))?,
            structure.integrate(guard(|l| b(l, 0.0, beta) - b(l, beta, beta)))?,
            structure.integrate(guard(|l| b(l, beta, beta)))?,
        )
    };
    Ok(SecondMomentTerms {
        large_square: ql * complement,
        small_square: qs * a,
        large_large: ml * ml * ll,
        large_small: 2.0 * ml * ms * ls,
        small_small: ms * ms * ss,
    })
}

pub fn second_moment_closed(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
) -> Result<f64> {
    Ok(second_moment_terms(t, structure, dep)?.total())
}

/// Mean, second moment and variance together, with the per-term breakdown.
pub fn variance_closed(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
) -> Result<MomentReport> {
    let mean = mean_closed(t, structure, dep)?;
    let terms = second_moment_terms(t, structure, dep)?;
    let mut report = MomentReport::new(t, mean, terms.total(), Method::Closed)?;
    report.terms = Some(terms);
    Ok(report)
}

/// `lim E[S(t)]/t = E[Y_ℓ] ∫ βλ/(β+λ) dL + E[Y_s] ∫ λ²/(β+λ) dL`.
pub fn mean_rate_limit(structure: &StructureDistribution, dep: &DependenceModel) -> Result<f64> {
    let (beta, large, small) = mixture(dep)?;
    let (ml, ms) = (large.moment(1)?, small.moment(1)?);
    structure.integrate(|l| {
        let s = beta + l;
        if s <= 0.0 {
            return 0.0;
        }
        ml * beta * l / s + ms * l * l / s
    })
}

/// Coefficients `(linear, quadratic)` with `E[S²(t)] = quadratic·t² + linear·t + o(t)`.
pub fn second_rate_limits(
    structure: &StructureDistribution,
    dep: &DependenceModel,
) -> Result<(f64, f64)> {
    let (beta, large, small) = mixture(dep)?;
    let (ml, ms) = (large.moment(1)?, small.moment(1)?);
    let (ql, qs) = (large.moment(2)?, small.moment(2)?);
    structure.moment(2)?;
    let linear = structure.integrate(|l| {
        let s = beta + l;
        if s <= 0.0 {
            return 0.0;
        }
        let s3 = s * s * s;
        ql * beta * l / s + qs * l * l / s - ml * ml * 4.0 * beta * beta * l * l / s3
            + ml * ms * 4.0 * beta * l * l * (beta - l) / s3
            + ms * ms * 4.0 * beta * l * l * l / s3
    })?;
    let quadratic = structure.integrate(|l| {
        let s = beta + l;
        if s <= 0.0 {
            return 0.0;
        }
        let c = (ml * beta + ms * l) / s;
        c * c * l * l
    })?;
    Ok((linear, quadratic))
}

/// `lim Var[S(t)]/t` for a degenerate structure and a single claim law `Y`.
///
/// The limit is `E[Y²]λ₀`, the compound Poisson variance rate: with one claim
/// type the dependence washes out of both moments exactly. It coincides with
/// `(E[Y])²λ₀` only when `Y` is a point mass.
pub fn variance_linear_limit(
    structure: &StructureDistribution,
    severity: &SeverityLaw,
) -> Result<f64> {
    if !structure.is_degenerate() {
        return Err(Error::Precondition(
            "linear variance growth needs a degenerate structure distribution".into(),
        ));
    }
    Ok(severity.moment(2)? * structure.mean()?)
}

/// `lim Var[S(t)]/t² = (E[Y])² Var[Λ]` for a single claim law `Y`.
pub fn variance_quadratic_limit(
    structure: &StructureDistribution,
    severity: &SeverityLaw,
) -> Result<f64> {
    Ok(severity.moment(1)?.powi(2) * structure.variance()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate_adaptive;

    fn bench_dep() -> DependenceModel {
        DependenceModel::exponential_mixture(
            1.0,
            SeverityLaw::exponential(10.0).unwrap(),
            SeverityLaw::exponential(1.0).unwrap(),
        )
        .unwrap()
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    /// `∫₀ᵗ λe^{−λv} (λ(t−v)+1) Δ(v) dv` straight from the dependence model.
    fn mean_by_gap_integral(t: f64, l: f64, dep: &DependenceModel) -> f64 {
        integrate_adaptive(
            |v| l * (-l * v).exp() * (l * (t - v) + 1.0) * dep.delta(1, v, None).unwrap(),
            0.0,
            t,
            1e-14,
            1e-13,
        )
        .value
    }

    #[test]
    fn benchmark_mean() {
        let l = StructureDistribution::degenerate(1.0).unwrap();
        let m = mean_closed(2.0, &l, &bench_dep()).unwrap();
        let a = (5.0 - (-4.0f64).exp()) / 4.0;
        assert!(rel(m, 10.0 * (2.0 - a) + a) < 1e-13);
        assert!(rel(m, mean_by_gap_integral(2.0, 1.0, &bench_dep())) < 1e-11);
        assert!((m - 8.7912).abs() < 1e-4);
    }

    #[test]
    fn homogeneous_matches_degenerate_structure() {
        for &(t, l) in &[(0.5, 0.5), (2.0, 1.0), (9.0, 3.0)] {
            let s = StructureDistribution::degenerate(l).unwrap();
            let a = mean_closed(t, &s, &bench_dep()).unwrap();
            let b = mean_closed_homogeneous(t, l, &bench_dep()).unwrap();
            assert!(rel(a, b) < 1e-12);
        }
    }

    #[test]
    fn zero_horizon() {
        let s = StructureDistribution::gamma(2.0, 1.0).unwrap();
        let r = variance_closed(0.0, &s, &bench_dep()).unwrap();
        assert_eq!((r.mean, r.second_moment, r.variance), (0.0, 0.0, 0.0));
    }

    #[test]
    fn compound_poisson_reduction() {
        let y = SeverityLaw::gamma(2.0, 1.5).unwrap();
        let dep =
            DependenceModel::exponential_mixture(0.0, SeverityLaw::exponential(7.0).unwrap(), y)
                .unwrap();
        let (ey, ey2) = (y.moment(1).unwrap(), y.moment(2).unwrap());
        for &l0 in &[0.5, 1.0, 2.0] {
            let s = StructureDistribution::degenerate(l0).unwrap();
            for &t in &[0.5, 1.0, 2.0, 5.0] {
                let r = variance_closed(t, &s, &dep).unwrap();
                assert!(rel(r.mean / t, ey * l0) < 1e-12);
                assert!(rel(r.variance / t, ey2 * l0) < 1e-12);
            }
        }
    }

    #[test]
    fn one_claim_type_mean_is_linear() {
        let y = SeverityLaw::lognormal(0.2, 0.5).unwrap();
        let dep = DependenceModel::exponential_mixture(2.5, y, y).unwrap();
        let s = StructureDistribution::finite_atoms([(0.5, 0.3), (2.0, 0.7)]).unwrap();
        let el = s.mean().unwrap();
        for &t in &[0.1, 1.0, 17.0] {
            let m = mean_closed(t, &s, &dep).unwrap();
            assert!(rel(m, y.mean().unwrap() * el * t) < 1e-10);
        }
    }

    #[test]
    fn second_moment_matches_direct_triple_integral() {
        // Degenerate L: E[S²] = ∫ λe^{−λv} Θ(v)(λ(t−v)+1) dv
        //   + ∫∫ λ² e^{−λ(y+v)} Δ(y)Δ(v)((λ(t−y−v)+2)² − 2) dv dy.
        let (t, l) = (1.5, 1.2);
        let dep = bench_dep();
        let d = |v: f64| dep.delta(1, v, None).unwrap();
        let th = |v: f64| dep.theta(1, v, None).unwrap();
        let first = integrate_adaptive(
            |v| l * (-l * v).exp() * th(v) * (l * (t - v) + 1.0),
            0.0,
            t,
            1e-13,
            1e-13,
        )
        .value;
        let second = integrate_adaptive(
            |y| {
                integrate_adaptive(
                    |v| {
                        let u = l * (t - y - v) + 2.0;
                        l * l * (-l * (y + v)).exp() * d(y) * d(v) * (u * u - 2.0)
                    },
                    0.0,
                    t - y,
                    1e-13,
                    1e-12,
                )
                .value
            },
            0.0,
            t,
            1e-12,
            1e-12,
        )
        .value;
        let s = StructureDistribution::degenerate(l).unwrap();
        let closed = second_moment_closed(t, &s, &dep).unwrap();
        assert!(
            rel(closed, first + second) < 1e-10,
            "{closed} vs {}",
            first + second
        );
    }

    #[test]
    fn infinite_second_moment_is_reported() {
        let dep = DependenceModel::exponential_mixture(
            1.0,
            SeverityLaw::pareto(1.5, 1.0).unwrap(),
            SeverityLaw::exponential(1.0).unwrap(),
        )
        .unwrap();
        let s = StructureDistribution::degenerate(1.0).unwrap();
        assert!(mean_closed(1.0, &s, &dep).is_ok());
        assert!(matches!(
            second_moment_closed(1.0, &s, &dep),
            Err(Error::InfiniteMoment(_))
        ));
    }

    #[test]
    fn rate_limits() {
        let y = SeverityLaw::exponential(3.0).unwrap();
        let one = DependenceModel::independent(y).unwrap();
        let s = StructureDistribution::finite_atoms([(1.0, 0.5), (4.0, 0.5)]).unwrap();
        assert!(rel(mean_rate_limit(&s, &one).unwrap(), 3.0 * 2.5) < 1e-14);
        let (_, quad) = second_rate_limits(&s, &one).unwrap();
        assert!(rel(quad, 9.0 * 8.5) < 1e-14);

        let d = StructureDistribution::degenerate(2.0).unwrap();
        let m = mean_rate_limit(&d, &bench_dep()).unwrap();
        assert!(rel(m, 10.0 * (1.0 / 3.0) * 2.0 + 1.0 * (2.0 / 3.0) * 2.0) < 1e-14);
        assert_eq!(
            variance_linear_limit(&d, &SeverityLaw::point_mass(3.0).unwrap()).unwrap(),
            18.0
        );
        assert!(matches!(
            variance_linear_limit(&s, &y),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn second_moment_growth_matches_limits() {
        let s = StructureDistribution::finite_atoms([(0.7, 0.4), (1.6, 0.6)]).unwrap();
        let dep = bench_dep();
        let (lin, quad) = second_rate_limits(&s, &dep).unwrap();
        let t = 80.0;
        let e2 = second_moment_closed(t, &s, &dep).unwrap();
        // the remainder after the affine part is bounded
        assert!(((e2 - quad * t * t) / t - lin).abs() * t < 50.0 * (quad + lin.abs()));
    }
}
