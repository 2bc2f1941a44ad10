//! Second moment from user-supplied conditional product expectations.
//!
//! Unlike the factorized engines, nothing is assumed about how `E[X_i X_j | …]`
//! depends on the four arrival times, so every term is integrated in its natural
//! dimension against the order-statistic densities. Terms of dimension up to
//! three use tensor Gauss–Legendre; the four-dimensional double-pair term uses a
//! tensor rule for counts up to [`JOINT_TENSOR_MAX_N`] and randomized
//! quasi-Monte Carlo beyond, whose standard error is reported.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_horizon, scaled_powers, CountWeights, Evaluation, OsLaw, QuadratureConfig};
use crate::error::Result;
use crate::model::{DependenceModel, MomentKernel, MomentOrder, ProcessSpec};
use crate::numeric::GaussLegendre;

/// Largest count whose double-pair term is integrated by the tensor rule.
pub const JOINT_TENSOR_MAX_N: usize = 12;

const QMC_SHIFTS: usize = 10;

/// Conditional claim moments given arrival times (`T_0 = 0`).
pub trait JointMoments: Sync {
    /// `E[X_i | T_{i-1} = prev, T_i = arrival]`.
    fn mean(&self, i: usize, prev: f64, arrival: f64) -> f64;
    /// `E[X_i² | T_{i-1} = prev, T_i = arrival]`.
    fn second(&self, i: usize, prev: f64, arrival: f64) -> f64;
    /// `E[X_i X_j | T_{i-1} = x, T_i = y, T_{j-1} = w, T_j = z]` for `i < j`
    /// (`y = w` when `j = i + 1`).
    fn product(&self, i: usize, j: usize, x: f64, y: f64, w: f64, z: f64) -> f64;
    /// Upper bound of every `E[X_i²]` and `E[X_i X_j]`, used for the truncation bound.
    fn second_bound(&self) -> f64;
}

/// Conditionally independent claims described by a [`DependenceModel`].
#[derive(Debug, Clone, Copy)]
pub struct FactorizedJoint<'a> {
    kernel: MomentKernel<'a>,
}

impl<'a> FactorizedJoint<'a> {
    pub fn new(dep: &'a DependenceModel) -> Result<Self> {
        Ok(Self {
            kernel: dep.kernel(MomentOrder::Second)?,
        })
    }
}

impl JointMoments for FactorizedJoint<'_> {
    fn mean(&self, i: usize, prev: f64, arrival: f64) -> f64 {
        self.kernel.mean(i, prev, arrival - prev)
    }

    fn second(&self, i: usize, prev: f64, arrival: f64) -> f64 {
        self.kernel.second(i, prev, arrival - prev)
    }

    fn product(&self, i: usize, j: usize, x: f64, y: f64, w: f64, z: f64) -> f64 {
        self.mean(i, x, y) * self.mean(j, w, z)
    }

    fn second_bound(&self) -> f64 {
        self.kernel
            .second_bound()
            .max(self.kernel.mean_bound().powi(2))
    }
}

/// `E[S(t)²]` for any order-statistic process from joint conditional moments.
pub fn second_theorem2_joint(
    t: f64,
    process: &ProcessSpec,
    joint: &dyn JointMoments,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_horizon(t)?;
    if t == 0.0 {
        return Ok(Evaluation::zero());
    }
    let law = OsLaw::new(process, t)?;
    let weights = CountWeights::new(process, t, cfg)?;
    let n = weights.n_star();
    let ctx = Ctx {
        law: &law,
        weights: &weights,
        joint,
        n,
    };
    let gl = GaussLegendre::new(cfg.nodes_per_axis);
    let gl4 = GaussLegendre::new(cfg.tensor4_nodes);
    let mut stderr2 = 0.0;
    let mut used_qmc = false;
    #[allow(clippy::type_complexity)]
    let mut integrate =
        |dim: usize,
         n_range: (usize, usize),
         f: &(dyn Fn(&[f64], (usize, usize)) -> f64 + Sync)| {
            if dim <= cfg.dim_cap && (dim < 4 || n_range.1 <= JOINT_TENSOR_MAX_N) {
                let rule = if dim == 4 { &gl4 } else { &gl };
                tensor_simplex(rule, dim, t, &|p| f(p, n_range))
            } else {
                let (v, se) = qmc_simplex(
                    dim,
                    t,
                    cfg.mc_fallback_samples,
                    cfg.qmc_seed ^ dim as u64,
                    &|p| f(p, n_range),
                );
                stderr2 += se * se;
                used_qmc = true;
                v
            }
        };

    let all = (0, n);
    let a = integrate(1, all, &|p, r| ctx.first_square(p, r))
        + integrate(2, all, &|p, r| ctx.later_square(p, r));
    let mut b = integrate(2, all, &|p, r| ctx.first_adjacent(p, r))
        + integrate(3, all, &|p, r| ctx.first_separated(p, r))
        + integrate(3, all, &|p, r| ctx.later_adjacent(p, r));
    if n >= 6 {
        if n <= JOINT_TENSOR_MAX_N || cfg.dim_cap < 4 {
            b += integrate(4, all, &|p, r| ctx.double_pair(p, r));
        } else {
            b += integrate(4, (0, JOINT_TENSOR_MAX_N), &|p, r| ctx.double_pair(p, r));
            b += integrate(4, (JOINT_TENSOR_MAX_N + 1, n), &|p, r| {
                ctx.double_pair(p, r)
            });
        }
    }
    Ok(Evaluation {
        value: a + 2.0 * b,
        residual_bound: weights.tail_second * joint.second_bound(),
        n_star: n,
        qmc_stderr: used_qmc.then(|| 2.0 * stderr2.sqrt()),
    })
}

struct Ctx<'a> {
    law: &'a OsLaw,
    weights: &'a CountWeights,
    joint: &'a dyn JointMoments,
    n: usize,
}

impl Ctx<'_> {
    /// `ω_n` restricted to `lo ≤ n ≤ hi`.
    #[inline]
    fn omega(&self, n: usize, (lo, hi): (usize, usize)) -> f64 {
        if n < lo || n > hi {
            0.0
        } else {
            self.weights.at(n)
        }
    }

    fn density(&self, p: &[f64]) -> f64 {
        p.iter().map(|&x| self.law.density(x)).product()
    }

    /// `Σ_c ω_{k+c} (1 − F(z))^c / c!` for `k = 0..=n`.
    fn right_tail(&self, z: f64, r: (usize, usize)) -> Vec<f64> {
        let mut q = Vec::new();
        scaled_powers(1.0 - self.law.cdf(z), self.n, &mut q);
        (0..=self.n)
            .map(|k| (0..=self.n - k).map(|c| self.omega(k + c, r) * q[c]).sum())
            .collect()
    }

    fn first_square(&self, p: &[f64], r: (usize, usize)) -> f64 {
        let y = p[0];
        let tail = self.right_tail(y, r);
        self.density(p) * self.joint.second(1, 0.0, y) * tail[1]
    }

    fn later_square(&self, p: &[f64], r: (usize, usize)) -> f64 {
        let (x, y) = (p[0], p[1]);
        let tail = self.right_tail(y, r);
        let mut pw = Vec::new();
        scaled_powers(self.law.cdf(x), self.n, &mut pw);
        let sum: f64 = (2..=self.n)
            .map(|i| self.joint.second(i, x, y) * pw[i - 2] * tail[i])
            .sum();
        self.density(p) * sum
    }

    fn first_adjacent(&self, p: &[f64], r: (usize, usize)) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let (y, z) = (p[0], p[1]);
        let tail = self.right_tail(z, r);
        self.density(p) * self.joint.product(1, 2, 0.0, y, y, z) * tail[2]
    }

    fn first_separated(&self, p: &[f64], r: (usize, usize)) -> f64 {
        if self.n < 3 {
            return 0.0;
        }
        let (y, w, z) = (p[0], p[1], p[2]);
        let tail = self.right_tail(z, r);
        let mut gap = Vec::new();
        scaled_powers(
            (self.law.cdf(w) - self.law.cdf(y)).max(0.0),
            self.n,
            &mut gap,
        );
        let sum: f64 = (3..=self.n)
            .map(|j| self.joint.product(1, j, 0.0, y, w, z) * gap[j - 3] * tail[j])
            .sum();
        self.density(p) * sum
    }

    fn later_adjacent(&self, p: &[f64], r: (usize, usize)) -> f64 {
        if self.n < 3 {
            return 0.0;
        }
        let (y, w, z) = (p[0], p[1], p[2]);
        let tail = self.right_tail(z, r);
        let mut pw = Vec::new();
        scaled_powers(self.law.cdf(y), self.n, &mut pw);
        let sum: f64 = (2..self.n)
            .map(|i| self.joint.product(i, i + 1, y, w, w, z) * pw[i - 2] * tail[i + 1])
            .sum();
        self.density(p) * sum
    }

    fn double_pair(&self, p: &[f64], r: (usize, usize)) -> f64 {
        let (x, y, w, z) = (p[0], p[1], p[2], p[3]);
        let tail = self.right_tail(z, r);
        let mut pw = Vec::new();
        let mut gap = Vec::new();
        scaled_powers(self.law.cdf(x), self.n, &mut pw);
        scaled_powers(
            (self.law.cdf(w) - self.law.cdf(y)).max(0.0),
            self.n,
            &mut gap,
        );
        let mut sum = 0.0;
        for i in 2..=self.n.saturating_sub(2) {
            for j in i + 2..=self.n {
                let wgt = pw[i - 2] * gap[j - i - 2] * tail[j];
                if wgt != 0.0 {
                    sum += self.joint.product(i, j, x, y, w, z) * wgt;
                }
            }
        }
        self.density(p) * sum
    }
}

/// Nested Gauss–Legendre over `0 ≤ x_1 ≤ … ≤ x_d ≤ t`, outermost axis in parallel.
fn tensor_simplex(
    gl: &GaussLegendre,
    dim: usize,
    t: f64,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> f64 {
    fn nest(
        gl: &GaussLegendre,
        t: f64,
        depth: usize,
        lo: f64,
        point: &mut Vec<f64>,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
    ) -> f64 {
        if depth == point.len() {
            return f(point);
        }
        let mut acc = 0.0;
        for (x, w) in gl.mapped(lo, t) {
            point[depth] = x;
            acc += w * nest(gl, t, depth + 1, x, point, f);
        }
        acc
    }
    let outer: Vec<(f64, f64)> = gl.mapped(0.0, t).collect();
    let parts: Vec<f64> = outer
        .par_iter()
        .map(|&(x, w)| {
            let mut point = vec![0.0; dim];
            point[0] = x;
            w * nest(gl, t, 1, x, &mut point, f)
        })
        .collect();
    parts.iter().sum()
}

/// Randomly shifted Halton points, sorted onto the ordered simplex of volume
/// `t^d / d!`. Returns the estimate and its standard error across shifts.
fn qmc_simplex(
    dim: usize,
    t: f64,
    samples: usize,
    seed: u64,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> (f64, f64) {
    const BASES: [u32; 4] = [2, 3, 5, 7];
    let per_shift = (samples / QMC_SHIFTS).max(1);
    let volume = t.powi(dim as i32) / (1..=dim).product::<usize>() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<Vec<f64>> = (0..QMC_SHIFTS)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let estimates: Vec<f64> = shifts
        .par_iter()
        .map(|shift| {
            let mut point = vec![0.0; dim];
            let mut acc = 0.0;
            for k in 1..=per_shift {
                for (d, x) in point.iter_mut().enumerate() {
                    let u = radical_inverse(k as u64, BASES[d]) + shift[d];
                    *x = t * (u - u.floor());
                }
                point.sort_by(f64::total_cmp);
                acc += f(&point);
            }
            volume * acc / per_shift as f64
        })
        .collect();
    let m = QMC_SHIFTS as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn radical_inverse(mut k: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while k > 0 {
        acc += (k % b) as f64 * scale;
        k /= b;
        scale *= inv;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::second_moment_closed;
    use crate::model::{SeverityLaw, StructureDistribution};
    use crate::quadrature::second_theorem2;

    fn bench_dep() -> DependenceModel {
        DependenceModel::exponential_mixture(
            1.0,
            SeverityLaw::exponential(10.0).unwrap(),
            SeverityLaw::exponential(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn qmc_integrates_simplex_volume() {
        let (v, se) = qmc_simplex(4, 2.0, 20_000, 7, &|_| 1.0);
        assert!((v - 16.0 / 24.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn matches_closed_form_at_unit_horizon() {
        let l = StructureDistribution::degenerate(1.0).unwrap();
        let p = ProcessSpec::mixed(l.clone());
        let dep = bench_dep();
        let joint = FactorizedJoint::new(&dep).unwrap();
        let cfg = QuadratureConfig {
            nodes_per_axis: 24,
            mc_fallback_samples: 20_000,
            ..Default::default()
        };
        let e = second_theorem2_joint(1.0, &p, &joint, &cfg).unwrap();
        let c = second_moment_closed(1.0, &l, &dep).unwrap();
        assert!((e.value - c).abs() < 1e-4 * c, "{} vs {c}", e.value);
    }

    #[test]
    fn large_counts_use_quasi_monte_carlo() {
        let l = StructureDistribution::degenerate(1.0).unwrap();
        let p = ProcessSpec::mixed(l.clone());
        let dep = bench_dep();
        let joint = FactorizedJoint::new(&dep).unwrap();
        let cfg = QuadratureConfig {
            nodes_per_axis: 24,
            mc_fallback_samples: 20_000,
            ..Default::default()
        };
        let e = second_theorem2_joint(2.0, &p, &joint, &cfg).unwrap();
        let c = second_moment_closed(2.0, &l, &dep).unwrap();
        assert!(e.n_star > JOINT_TENSOR_MAX_N);
        let se = e.qmc_stderr.unwrap();
        assert!(se < 1e-6 * c);
        assert!((e.value - c).abs() < 1e-4 * c, "{} vs {c}", e.value);
    }

    #[test]
    fn agrees_with_factorized_engine_for_nhpp() {
        use crate::model::LinearIntensity;
        let p = ProcessSpec::nhpp(LinearIntensity::new(0.5, 1.5).unwrap());
        let dep = bench_dep();
        let joint = FactorizedJoint::new(&dep).unwrap();
        let cfg = QuadratureConfig {
            nodes_per_axis: 24,
            n_cap: 80,
            mc_fallback_samples: 20_000,
            ..Default::default()
        };
        let a = second_theorem2_joint(0.8, &p, &joint, &cfg).unwrap().value;
        let b = second_theorem2(0.8, &p, &dep, &QuadratureConfig::default())
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    }
}
