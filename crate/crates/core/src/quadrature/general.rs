//! Arrival-time form valid for any order-statistic process.
//!
//! Both moments are assembled from two one-dimensional tables:
//!
//! * left block `ℓ_i(y)`: the conditional moment of claim `i` arriving at `y`,
//!   integrated over the previous arrival `x` with weight `f_t(x) F_t(x)^{i-2}/(i-2)!`
//!   (for `i = 1` the previous arrival is `0` and there is no integral);
//! * right block `R_c(w)`: the conditional moment of a claim whose predecessor
//!   arrives at `w`, integrated over its own arrival `z` with weight
//!   `f_t(z) (1 − F_t(z))^c / c!`, `c` claims following it.
//!
//! With `ω_n = π_{t,n} n!` the multinomial coefficients become products of
//! these factorial-scaled powers, and every sum over claim indices is a short
//! convolution evaluated at each quadrature node.

use rayon::prelude::*;

use super::{
    check_horizon, scale_table, scaled_powers, second_envelope, CountWeights, Evaluation, OsLaw,
    QuadratureConfig,
};
use crate::error::Result;
use crate::model::{DependenceModel, MomentOrder, ProcessSpec};
use crate::numeric::GaussLegendre;

/// `E[S(t)]` for an order-statistic process, claims depending on `(T_{i-1}, T_i)`.
pub fn mean_theorem1(
    t: f64,
    process: &ProcessSpec,
    dep: &DependenceModel,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_horizon(t)?;
    let kernel = dep.kernel(MomentOrder::First)?;
    if t == 0.0 {
        return Ok(Evaluation::zero());
    }
    let law = OsLaw::new(process, t)?;
    let weights = CountWeights::new(process, t, cfg)?;
    let n = weights.n_star();
    let gl = GaussLegendre::new(cfg.nodes_per_axis);
    let scale = scale_table(&kernel, n, 1);
    let value = first_order(t, &law, &gl, &weights, &scale, &|x, v| {
        kernel.base_mean(x, v)
    });
    Ok(Evaluation {
        value,
        residual_bound: weights.tail_first * kernel.mean_bound(),
        n_star: n,
        qmc_stderr: None,
    })
}

/// `E[S(t)²]` for an order-statistic process with conditionally independent claims.
pub fn second_theorem2(
    t: f64,
    process: &ProcessSpec,
    dep: &DependenceModel,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_horizon(t)?;
    let kernel = dep.kernel(MomentOrder::Second)?;
    if t == 0.0 {
        return Ok(Evaluation::zero());
    }
    let law = OsLaw::new(process, t)?;
    let weights = CountWeights::new(process, t, cfg)?;
    let n = weights.n_star();
    let gl = GaussLegendre::new(cfg.nodes_per_axis);
    let s1 = scale_table(&kernel, n, 1);
    let s2 = scale_table(&kernel, n, 2);
    let mean = |x: f64, v: f64| kernel.base_mean(x, v);

    let a = first_order(t, &law, &gl, &weights, &s2, &|x, v| {
        kernel.base_second(x, v)
    });
    let b = cross_terms(t, &law, &gl, &weights, &s1, &mean);
    Ok(Evaluation {
        value: a + 2.0 * b,
        residual_bound: weights.tail_second * second_envelope(&kernel),
        n_star: n,
        qmc_stderr: None,
    })
}

/// `ℓ_i(y)` for `i = 1..=n` into `out[i]`.
fn left_block(
    y: f64,
    law: &OsLaw,
    gl: &GaussLegendre,
    n: usize,
    moment: &(dyn Fn(f64, f64) -> f64 + Sync),
    out: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
) {
    out.clear();
    out.resize(n + 1, 0.0);
    if n == 0 {
        return;
    }
    out[1] = moment(0.0, y);
    if n < 2 {
        return;
    }
    for (x, wx) in gl.mapped(0.0, y) {
        let base = wx * law.density(x) * moment(x, y - x);
        if base == 0.0 {
            continue;
        }
        scaled_powers(law.cdf(x), n - 2, scratch);
        for (a, p) in scratch.iter().enumerate() {
            out[a + 2] += base * p;
        }
    }
}

/// `R_c(w)` for `c = 0..=n`.
#[allow(clippy::too_many_arguments)]
fn right_block(
    w: f64,
    t: f64,
    law: &OsLaw,
    gl: &GaussLegendre,
    n: usize,
    moment: &(dyn Fn(f64, f64) -> f64 + Sync),
    out: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
) {
    out.clear();
    out.resize(n + 1, 0.0);
    for (z, wz) in gl.mapped(w, t) {
        let base = wz * law.density(z) * moment(w, z - w);
        if base == 0.0 {
            continue;
        }
        scaled_powers(1.0 - law.cdf(z), n, scratch);
        for (c, q) in scratch.iter().enumerate() {
            out[c] += base * q;
        }
    }
}

/// `Σ_n π_n Σ_i E[m(X_i) | N = n]` for a per-claim moment `m` with index weights.
fn first_order(
    t: f64,
    law: &OsLaw,
    gl: &GaussLegendre,
    weights: &CountWeights,
    index_weight: &[f64],
    moment: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> f64 {
    let n = weights.n_star();
    let nodes: Vec<(f64, f64)> = gl.mapped(0.0, t).collect();
    let parts: Vec<f64> = nodes
        .par_iter()
        .map(|&(y, wy)| {
            let mut left = Vec::new();
            let mut scratch = Vec::new();
            left_block(y, law, gl, n, moment, &mut left, &mut scratch);
            let mut q = Vec::new();
            scaled_powers(1.0 - law.cdf(y), n, &mut q);
            let mut acc = 0.0;
            for i in 1..=n {
                let tail: f64 = (0..=n - i).map(|c| weights.at(i + c) * q[c]).sum();
                acc += index_weight[i] * left[i] * tail;
            }
            wy * law.density(y) * acc
        })
        .collect();
    parts.iter().sum()
}

/// `Σ_n π_n Σ_{i<j} E[X_i X_j | N = n]` for conditionally independent claims.
fn cross_terms(
    t: f64,
    law: &OsLaw,
    gl: &GaussLegendre,
    weights: &CountWeights,
    scale: &[f64],
    mean: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> f64 {
    let n = weights.n_star();
    if n < 2 {
        return 0.0;
    }
    let nodes: Vec<(f64, f64)> = gl.mapped(0.0, t).collect();
    let parts: Vec<f64> = nodes
        .par_iter()
        .map(|&(w, ww)| {
            let mut scratch = Vec::new();
            let mut right = Vec::new();
            right_block(w, t, law, gl, n, mean, &mut right, &mut scratch);
            let mut left = Vec::new();
            let f_w = law.cdf(w);

            // Claims i and i+1 with T_i = w.
            left_block(w, law, gl, n, mean, &mut left, &mut scratch);
            let mut adjacent = 0.0;
            for i in 1..n {
                let tail: f64 = (0..=n - i - 1)
                    .map(|c| weights.at(i + 1 + c) * right[c])
                    .sum();
                adjacent += scale[i] * scale[i + 1] * left[i] * tail;
            }

            // Claims i < j - 1 with T_i = y < T_{j-1} = w; `gathered[j]` collects
            // s_j Σ_{i+b=j-2} s_i ℓ_i(y) (F(w) − F(y))^b / b!.
            let mut gathered = vec![0.0; n + 1];
            let mut gap = Vec::new();
            for (y, wy) in gl.mapped(0.0, w) {
                left_block(y, law, gl, n, mean, &mut left, &mut scratch);
                scaled_powers((f_w - law.cdf(y)).max(0.0), n, &mut gap);
                let base = wy * law.density(y);
                for j in 3..=n {
                    let mut acc = 0.0;
                    for i in 1..=j - 2 {
                        acc += scale[i] * left[i] * gap[j - 2 - i];
                    }
                    gathered[j] += base * acc;
                }
            }
            let mut separated = 0.0;
            for j in 3..=n {
                let tail: f64 = (0..=n - j).map(|c| weights.at(j + c) * right[c]).sum();
                separated += scale[j] * gathered[j] * tail;
            }
            ww * law.density(w) * (adjacent + separated)
        })
        .collect();
    parts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::{mean_closed, second_moment_closed};
    use crate::model::{PowerLawIntensity, SeverityLaw, StructureDistribution};

    fn bench_dep() -> DependenceModel {
        DependenceModel::exponential_mixture(
            1.0,
            SeverityLaw::exponential(10.0).unwrap(),
            SeverityLaw::exponential(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_claims_give_scaled_count_moments() {
        let dep = DependenceModel::independent(SeverityLaw::point_mass(2.5).unwrap()).unwrap();
        let p = ProcessSpec::homogeneous(1.3).unwrap();
        let cfg = QuadratureConfig::default();
        let t = 1.7;
        // Only the count-series truncation separates these from the exact values.
        let m = mean_theorem1(t, &p, &dep, &cfg).unwrap();
        assert!((m.value - 2.5 * 1.3 * t).abs() <= m.residual_bound + 1e-12);
        let s = second_theorem2(t, &p, &dep, &cfg).unwrap();
        let mu = 1.3 * t;
        assert!((s.value - 6.25 * (mu + mu * mu)).abs() <= s.residual_bound + 1e-11);
    }

    #[test]
    fn matches_closed_form_on_benchmark() {
        let p = ProcessSpec::mixed(StructureDistribution::degenerate(1.0).unwrap());
        let l = StructureDistribution::degenerate(1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let m = mean_theorem1(2.0, &p, &bench_dep(), &cfg).unwrap();
        let c = mean_closed(2.0, &l, &bench_dep()).unwrap();
        assert!((m.value - c).abs() < 1e-8 * c, "{} vs {c}", m.value);
        let s = second_theorem2(1.0, &p, &bench_dep(), &cfg).unwrap();
        let c2 = second_moment_closed(1.0, &l, &bench_dep()).unwrap();
        assert!((s.value - c2).abs() < 1e-8 * c2, "{} vs {c2}", s.value);
    }

    #[test]
    fn nhpp_mean_with_constant_claims() {
        let p = ProcessSpec::nhpp(PowerLawIntensity::new(0.8, 2.0).unwrap());
        let dep = DependenceModel::independent(SeverityLaw::exponential(3.0).unwrap()).unwrap();
        let cfg = QuadratureConfig::default();
        let t = 2.0;
        let m = mean_theorem1(t, &p, &dep, &cfg).unwrap();
        assert!((m.value - 3.0 * 0.8 * 4.0).abs() <= m.residual_bound + 1e-12);
        let s = second_theorem2(t, &p, &dep, &cfg).unwrap();
        let mu: f64 = 3.2;
        // compound Poisson with mean mu: E[S²] = mu E[Y²] + (mu E[Y])²
        let want = mu * 18.0 + (mu * 3.0).powi(2);
        assert!((s.value - want).abs() <= s.residual_bound + 1e-11);
    }

    #[test]
    fn zero_horizon_is_zero() {
        let p = ProcessSpec::homogeneous(1.0).unwrap();
        let cfg = QuadratureConfig::default();
        assert_eq!(
            mean_theorem1(0.0, &p, &bench_dep(), &cfg).unwrap().value,
            0.0
        );
        assert_eq!(
            second_theorem2(0.0, &p, &bench_dep(), &cfg).unwrap().value,
            0.0
        );
    }

    #[test]
    fn series_cap_is_reported() {
        let p = ProcessSpec::homogeneous(50.0).unwrap();
        let cfg = QuadratureConfig::default();
        let err = mean_theorem1(2.0, &p, &bench_dep(), &cfg).unwrap_err();
        assert!(err.is_numeric());
    }
}
