//! Mixed Poisson form in `(previous arrival, inter-claim time)` coordinates.
//!
//! Arrival times are rescaled to the unit simplex (`x = tξ`, `v = tν`); given
//! `N(t) = n` they are uniform order statistics, so every density is a product of
//! factorial-scaled powers `ξ^a/a!` of the simplex gaps times `n!`. With
//! `ω_n = π_n n!` each moment becomes a low-dimensional integral whose integrand
//! is a short convolution over the gap exponents.

use rayon::prelude::*;

use super::{
    check_horizon, scale_table, scaled_powers, second_envelope, CountWeights, Evaluation,
    QuadratureConfig,
};
use crate::error::Result;
use crate::model::{DependenceModel, MomentOrder, ProcessSpec, StructureDistribution};
use crate::numeric::GaussLegendre;

type Moment<'a> = dyn Fn(f64, f64) -> f64 + Sync + 'a;

/// `E[S(t)]` for a mixed Poisson process with claims depending on `(T_{i-1}, V_i)`.
pub fn mean_theorem3(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_horizon(t)?;
    let kernel = dep.kernel(MomentOrder::First)?;
    if t == 0.0 {
        return Ok(Evaluation::zero());
    }
    let process = ProcessSpec::mixed(structure.clone());
    let weights = CountWeights::new(&process, t, cfg)?;
    let gl = GaussLegendre::new(cfg.nodes_per_axis);
    let scale = scale_table(&kernel, weights.n_star(), 1);
    let moment = |x: f64, v: f64| kernel.base_mean(t * x, t * v);
    Ok(Evaluation {
        value: first_order(&gl, &weights, &scale, &moment),
        residual_bound: weights.tail_first * kernel.mean_bound(),
        n_star: weights.n_star(),
        qmc_stderr: None,
    })
}

/// `E[S(t)²]` for a mixed Poisson process with conditionally independent claims.
pub fn second_theorem5(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_horizon(t)?;
    let kernel = dep.kernel(MomentOrder::Second)?;
    if t == 0.0 {
        return Ok(Evaluation::zero());
    }
    let process = ProcessSpec::mixed(structure.clone());
    let weights = CountWeights::new(&process, t, cfg)?;
    let n = weights.n_star();
    let gl = GaussLegendre::new(cfg.nodes_per_axis);
    let s1 = scale_table(&kernel, n, 1);
    let s2 = scale_table(&kernel, n, 2);
    let mean = |x: f64, v: f64| kernel.base_mean(t * x, t * v);
    let second = |x: f64, v: f64| kernel.base_second(t * x, t * v);

    let a = first_order(&gl, &weights, &s2, &second);
    let b = first_adjacent(&gl, &weights, &s1, &mean)
        + later_adjacent(&gl, &weights, &s1, &mean)
        + separated(&gl, &weights, &s1, &mean);
    Ok(Evaluation {
        value: a + 2.0 * b,
        residual_bound: weights.tail_second * second_envelope(&kernel),
        n_star: n,
        qmc_stderr: None,
    })
}

/// Rule nodes on `[a, b]`, empty when the interval is degenerate.
fn nodes(gl: &GaussLegendre, a: f64, b: f64) -> Vec<(f64, f64)> {
    if b > a {
        gl.mapped(a, b).collect()
    } else {
        Vec::new()
    }
}

/// `Σ_i E[s_i^p m(T_{i-1}, V_i)]` for a per-claim moment `m`.
fn first_order(
    gl: &GaussLegendre,
    weights: &CountWeights,
    scale: &[f64],
    moment: &Moment<'_>,
) -> f64 {
    let n = weights.n_star();
    if n == 0 {
        return 0.0;
    }
    let mut q = Vec::new();
    // Claim 1: T_1 = η, the other n−1 arrivals after it.
    let first: f64 = nodes(gl, 0.0, 1.0)
        .into_iter()
        .map(|(eta, w)| {
            scaled_powers(1.0 - eta, n - 1, &mut q);
            let series: f64 = (1..=n).map(|m| weights.at(m) * q[m - 1]).sum();
            w * moment(0.0, eta) * scale[1] * series
        })
        .sum();
    if n < 2 {
        return first;
    }
    // Claims i ≥ 2: a = i − 2 arrivals before ξ, c = n − i after ξ + ν.
    let rest: Vec<f64> = nodes(gl, 0.0, 1.0)
        .par_iter()
        .map(|&(xi, wx)| {
            let mut p = Vec::new();
            let mut q = Vec::new();
            scaled_powers(xi, n - 2, &mut p);
            let g: Vec<f64> = (0..=n - 2)
                .map(|c| {
                    (0..=n - 2 - c)
                        .map(|a| weights.at(a + c + 2) * scale[a + 2] * p[a])
                        .sum()
                })
                .collect();
            let mut acc = 0.0;
            for (nu, wn) in nodes(gl, 0.0, 1.0 - xi) {
                scaled_powers((1.0 - xi - nu).max(0.0), n - 2, &mut q);
                let poly: f64 = g.iter().zip(&q).map(|(g, q)| g * q).sum();
                acc += wn * moment(xi, nu) * poly;
            }
            wx * acc
        })
        .collect();
    first + rest.iter().sum::<f64>()
}

/// `E[X_1 X_2]` summed over `n`.
fn first_adjacent(gl: &GaussLegendre, weights: &CountWeights, s: &[f64], mean: &Moment<'_>) -> f64 {
    let n = weights.n_star();
    if n < 2 {
        return 0.0;
    }
    let parts: Vec<f64> = nodes(gl, 0.0, 1.0)
        .par_iter()
        .map(|&(eta, we)| {
            let mut q = Vec::new();
            let mut acc = 0.0;
            for (nu, wn) in nodes(gl, 0.0, 1.0 - eta) {
                scaled_powers((1.0 - eta - nu).max(0.0), n - 2, &mut q);
                let series: f64 = (0..=n - 2).map(|c| weights.at(c + 2) * q[c]).sum();
                acc += wn * mean(eta, nu) * series;
            }
            we * mean(0.0, eta) * acc
        })
        .collect();
    s[1] * s[2] * parts.iter().sum::<f64>()
}

/// `Σ_{i ≥ 2} E[X_i X_{i+1}]`: `T_{i-1} = ξ`, gaps `u`, `ν`.
fn later_adjacent(gl: &GaussLegendre, weights: &CountWeights, s: &[f64], mean: &Moment<'_>) -> f64 {
    let n = weights.n_star();
    if n < 3 {
        return 0.0;
    }
    let parts: Vec<f64> = nodes(gl, 0.0, 1.0)
        .par_iter()
        .map(|&(xi, wx)| {
            let mut p = Vec::new();
            let mut q = Vec::new();
            scaled_powers(xi, n - 3, &mut p);
            let g: Vec<f64> = (0..=n - 3)
                .map(|c| {
                    (0..=n - 3 - c)
                        .map(|a| weights.at(a + c + 3) * s[a + 2] * s[a + 3] * p[a])
                        .sum()
                })
                .collect();
            let mut acc = 0.0;
            for (u, wu) in nodes(gl, 0.0, 1.0 - xi) {
                let left = mean(xi, u);
                let mut inner = 0.0;
                for (nu, wn) in nodes(gl, 0.0, 1.0 - xi - u) {
                    scaled_powers((1.0 - xi - u - nu).max(0.0), n - 3, &mut q);
                    let poly: f64 = g.iter().zip(&q).map(|(g, q)| g * q).sum();
                    inner += wn * mean(xi + u, nu) * poly;
                }
                acc += wu * left * inner;
            }
            wx * acc
        })
        .collect();
    parts.iter().sum()
}

/// `Σ_{j ≥ i+2} E[X_i X_j]`, organized around `ω = T_{j-1}`.
fn separated(gl: &GaussLegendre, weights: &CountWeights, s: &[f64], mean: &Moment<'_>) -> f64 {
    let n = weights.n_star();
    if n < 3 {
        return 0.0;
    }
    let parts: Vec<f64> = nodes(gl, 0.0, 1.0)
        .par_iter()
        .map(|&(om, wo)| {
            let mut tmp = Vec::new();

            // R_c(ω) = ∫ Δ(ω, ν) (1 − ω − ν)^c / c! dν
            let mut right = vec![0.0; n + 1];
            for (nu, wn) in nodes(gl, 0.0, 1.0 - om) {
                let base = wn * mean(om, nu);
                scaled_powers((1.0 - om - nu).max(0.0), n, &mut tmp);
                for (r, q) in right.iter_mut().zip(&tmp) {
                    *r += base * q;
                }
            }

            // `gathered[j]` holds the left part of claim pair (i, j) with
            // T_{j-1} = ω, before the factor s_j.
            let mut gathered = vec![0.0; n + 1];

            // i = 1: T_1 = η, b = j − 3 arrivals in (η, ω).
            for (eta, we) in nodes(gl, 0.0, om) {
                let base = we * mean(0.0, eta) * s[1];
                scaled_powers(om - eta, n - 3, &mut tmp);
                for (b, q) in tmp.iter().enumerate() {
                    gathered[b + 3] += base * q;
                }
            }

            // i ≥ 2: T_{i-1} = ξ, V_i = u, a = i − 2 arrivals before ξ and
            // b = j − i − 2 in (ξ + u, ω).
            if n >= 4 {
                let mut p = Vec::new();
                let mut h = vec![0.0; n - 3];
                for (xi, wx) in nodes(gl, 0.0, om) {
                    h.iter_mut().for_each(|x| *x = 0.0);
                    for (u, wu) in nodes(gl, 0.0, om - xi) {
                        let base = wu * mean(xi, u);
                        scaled_powers((om - xi - u).max(0.0), n - 4, &mut tmp);
                        for (hb, q) in h.iter_mut().zip(&tmp) {
                            *hb += base * q;
                        }
                    }
                    scaled_powers(xi, n - 4, &mut p);
                    for j in 4..=n {
                        let conv: f64 = (0..=j - 4).map(|a| s[a + 2] * p[a] * h[j - 4 - a]).sum();
                        gathered[j] += wx * conv;
                    }
                }
            }

            let mut acc = 0.0;
            for j in 3..=n {
                let tail: f64 = (0..=n - j).map(|c| weights.at(j + c) * right[c]).sum();
                acc += s[j] * gathered[j] * tail;
            }
            wo * acc
        })
        .collect();
    parts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::{mean_closed, second_moment_closed};
    use crate::model::{SeverityLaw, TimeGapTable};
    use crate::quadrature::{mean_theorem1, second_theorem2};

    fn bench_dep(beta: f64) -> DependenceModel {
        DependenceModel::exponential_mixture(
            beta,
            SeverityLaw::exponential(10.0).unwrap(),
            SeverityLaw::exponential(1.0).unwrap(),
        )
        .unwrap()
    }

    fn time_table() -> DependenceModel {
        DependenceModel::TabulatedTV(
            TimeGapTable::new(
                vec![0.0, 1.0, 2.0],
                vec![0.0, 0.5, 3.0],
                vec![1.0, 2.0, 4.0, 1.5, 2.5, 3.0, 2.0, 2.0, 5.0],
                vec![2.0, 8.0, 32.0, 4.5, 12.5, 18.0, 8.0, 8.0, 50.0],
                vec![1.0, 1.2, 0.9],
            )
            .unwrap(),
        )
    }

    #[test]
    fn benchmark_mean_matches_closed() {
        let l = StructureDistribution::degenerate(1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let q = mean_theorem3(2.0, &l, &bench_dep(1.0), &cfg).unwrap();
        let c = mean_closed(2.0, &l, &bench_dep(1.0)).unwrap();
        assert!((q.value - c).abs() < 1e-9 * c, "{} vs {c}", q.value);
        assert!((c - 8.791).abs() < 1e-3);
    }

    #[test]
    fn second_moment_matches_closed_for_atoms() {
        let l = StructureDistribution::finite_atoms([(0.5, 0.3), (1.5, 0.7)]).unwrap();
        let cfg = QuadratureConfig::default();
        let q = second_theorem5(1.0, &l, &bench_dep(2.0), &cfg).unwrap();
        let c = second_moment_closed(1.0, &l, &bench_dep(2.0)).unwrap();
        assert!((q.value - c).abs() < 1e-9 * c, "{} vs {c}", q.value);
    }

    #[test]
    fn time_dependent_table_agrees_with_arrival_form() {
        let l = StructureDistribution::degenerate(1.3).unwrap();
        let p = ProcessSpec::mixed(l.clone());
        let cfg = QuadratureConfig::default();
        let dep = time_table();
        let a = mean_theorem3(1.5, &l, &dep, &cfg).unwrap().value;
        let b = mean_theorem1(1.5, &p, &dep, &cfg).unwrap().value;
        // Piecewise-linear kernels limit Gauss–Legendre to algebraic accuracy.
        assert!((a - b).abs() < 1e-5 * a, "{a} vs {b}");
        let a = second_theorem5(1.5, &l, &dep, &cfg).unwrap().value;
        let b = second_theorem2(1.5, &p, &dep, &cfg).unwrap().value;
        assert!((a - b).abs() < 1e-5 * a, "{a} vs {b}");
    }

    #[test]
    fn constant_claims() {
        let l = StructureDistribution::gamma(2.0, 2.0).unwrap();
        let dep = DependenceModel::independent(SeverityLaw::point_mass(3.0).unwrap()).unwrap();
        let cfg = QuadratureConfig::default();
        let t = 1.2;
        let m = mean_theorem3(t, &l, &dep, &cfg).unwrap();
        assert!((m.value - 3.0 * t).abs() <= m.residual_bound + 1e-12);
        let s = second_theorem5(t, &l, &dep, &cfg).unwrap();
        // E[N²] = E[Λ]t + E[Λ²]t² with E[Λ²] = 1 + 1/2
        let en2 = t + 1.5 * t * t;
        assert!(
            (s.value - 9.0 * en2).abs() <= s.residual_bound + 1e-11,
            "{s:?}"
        );
    }
}
