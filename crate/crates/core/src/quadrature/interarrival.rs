//! Mixed Poisson arrivals with claims depending on the inter-claim time only.
//!
//! Conditional on the rate `λ`, inter-claim times are i.i.d. exponential, so the
//! claim index only enters through the number of arrivals fitting in the time left
//! over. That count is Poisson, and each moment reduces to one- and
//! two-dimensional integrals over the gaps of Poisson functionals, integrated
//! against the structure law afterwards.

use super::series::{poisson_series, ScaleSums};
use super::{check_horizon, CountWeights, Evaluation, QuadratureConfig};
use crate::error::{Error, Result};
use crate::model::{
    DependenceModel, MomentKernel, MomentOrder, ProcessSpec, StructureDistribution,
};
use crate::numeric::GaussLegendre;

/// `E[S(t)]` with `E[X_i | V_i = v] = s_i Δ(v)`.
pub fn mean_theorem4(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    let ctx = Context::new(t, structure, dep, cfg, MomentOrder::First)?;
    if t == 0.0 {
        return Ok(Evaluation::zero());
    }
    let mut residual: f64 = 0.0;
    let value = structure.try_integrate(|lambda| {
        let (v, r) = ctx.mean_given_rate(lambda)?;
        residual = residual.max(r);
        Ok(v)
    })?;
    Ok(Evaluation {
        value,
        residual_bound: residual,
        n_star: ctx.n_star,
        qmc_stderr: None,
    })
}

/// `E[S(t)²]` with conditionally independent claims,
/// `E[X_i | V_i] = s_i Δ(V_i)` and `E[X_i² | V_i] = s_i² Θ(V_i)`.
pub fn second_theorem6(
    t: f64,
    structure: &StructureDistribution,
    dep: &DependenceModel,
    cfg: &QuadratureConfig,
) -> Result<Evaluation> {
    let ctx = Context::new(t, structure, dep, cfg, MomentOrder::Second)?;
    if t == 0.0 {
        return Ok(Evaluation::zero());
    }
    let mut residual: f64 = 0.0;
    let value = structure.try_integrate(|lambda| {
        let (v, r) = ctx.second_given_rate(lambda)?;
        residual = residual.max(r);
        Ok(v)
    })?;
    Ok(Evaluation {
        value,
        residual_bound: residual,
        n_star: ctx.n_star,
        qmc_stderr: None,
    })
}

struct Context<'a> {
    t: f64,
    kernel: MomentKernel<'a>,
    sums: ScaleSums,
    invariant: bool,
    gl: GaussLegendre,
    knots: &'a [f64],
    tail_epsilon: f64,
    /// Truncation point of the unconditional count series, for reporting.
    n_star: usize,
}

impl<'a> Context<'a> {
    fn new(
        t: f64,
        structure: &StructureDistribution,
        dep: &'a DependenceModel,
        cfg: &QuadratureConfig,
        order: MomentOrder,
    ) -> Result<Self> {
        cfg.validate()?;
        check_horizon(t)?;
        if !dep.is_gap_only() {
            return Err(Error::Precondition(
                "claims must depend on the inter-claim time only".into(),
            ));
        }
        let kernel = dep.kernel(order)?;
        let table_len = match dep {
            DependenceModel::TabulatedV(table) => table.index_scale.len(),
            _ => 1,
        };
        let n_star = if t > 0.0 {
            CountWeights::new(&ProcessSpec::mixed(structure.clone()), t, cfg)?.n_star()
        } else {
            0
        };
        Ok(Self {
            t,
            kernel,
            sums: ScaleSums::new(|i| kernel.scale(i), table_len),
            invariant: dep.is_index_invariant(),
            gl: GaussLegendre::new(cfg.nodes_per_axis),
            knots: dep.gap_knots(),
            tail_epsilon: cfg.tail_epsilon,
            n_star,
        })
    }

    /// `E[h(N)]` for `N ~ Poisson(μ)` with its truncation bound.
    fn expect(&self, mu: f64, h: impl Fn(usize) -> f64) -> Result<(f64, f64)> {
        let (value, tail, n) = poisson_series(mu, &h, self.tail_epsilon)?;
        Ok((value, 2.0 * tail * h(n + 1).abs().max(h(n).abs())))
    }

    /// `E[σ_1(N + 1)]`, `σ_1(k) = Σ_{i ≤ k} s_i`.
    fn sigma1(&self, mu: f64) -> Result<(f64, f64)> {
        if self.invariant {
            return Ok((mu + 1.0, 0.0));
        }
        self.expect(mu, |n| self.sums.first(n + 1))
    }

    /// `E[σ_2(N + 1)]`, `σ_2(k) = Σ_{i ≤ k} s_i²`.
    fn sigma2(&self, mu: f64) -> Result<(f64, f64)> {
        if self.invariant {
            return Ok((mu + 1.0, 0.0));
        }
        self.expect(mu, |n| self.sums.second(n + 1))
    }

    /// `E[σ_1(N + 2)² − σ_2(N + 2)]`.
    fn upsilon(&self, mu: f64) -> Result<(f64, f64)> {
        if self.invariant {
            return Ok(((mu + 2.0).powi(2) - 2.0, 0.0));
        }
        self.expect(mu, |n| self.sums.cross(n + 2))
    }

    fn panels(&self, lambda: f64) -> usize {
        ((lambda * self.t / 8.0).ceil() as usize).max(1)
    }

    /// Nodes of the composite rule on `[a, b]`, with panel edges at every
    /// kink of the conditional moments.
    fn rule(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        if b <= a {
            return Vec::new();
        }
        let mut edges = vec![a];
        edges.extend(self.knots.iter().copied().filter(|&k| k > a && k < b));
        edges.push(b);
        let width = (b - a) / panels as f64;
        edges
            .windows(2)
            .flat_map(|e| {
                let m = (((e[1] - e[0]) / width).ceil() as usize).max(1);
                let h = (e[1] - e[0]) / m as f64;
                (0..m).flat_map(move |k| {
                    let lo = e[0] + k as f64 * h;
                    self.gl.mapped(lo, lo + h)
                })
            })
            .collect()
    }

    fn mean_given_rate(&self, lambda: f64) -> Result<(f64, f64)> {
        if lambda <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let t = self.t;
        let mut value = 0.0;
        let mut residual: f64 = 0.0;
        for (v, w) in self.rule(0.0, t, self.panels(lambda)) {
            let (h, r) = self.sigma1(lambda * (t - v))?;
            value += w * lambda * (-lambda * v).exp() * self.kernel.base_mean(0.0, v) * h;
            residual = residual.max(r);
        }
        Ok((value, residual * self.kernel.mean_bound()))
    }

    fn second_given_rate(&self, lambda: f64) -> Result<(f64, f64)> {
        if lambda <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let t = self.t;
        let panels = self.panels(lambda);
        let mut value = 0.0;
        let mut residual: f64 = 0.0;
        for (v, w) in self.rule(0.0, t, panels) {
            let (h, r) = self.sigma2(lambda * (t - v))?;
            value += w * lambda * (-lambda * v).exp() * self.kernel.base_second(0.0, v) * h;
            residual = residual.max(r * self.kernel.second_bound());
        }
        for (y, wy) in self.rule(0.0, t, panels) {
            let left = lambda * (-lambda * y).exp() * self.kernel.base_mean(0.0, y);
            let mut inner = 0.0;
            for (v, wv) in self.rule(0.0, t - y, panels) {
                let (h, r) = self.upsilon(lambda * (t - y - v))?;
                inner += wv * lambda * (-lambda * v).exp() * self.kernel.base_mean(0.0, v) * h;
                residual = residual.max(r * self.kernel.mean_bound().powi(2));
            }
            value += wy * left * inner;
        }
        Ok((value, residual))
    }
}
