//! The special functions 𝔄 and 𝔅 behind the closed-form moments, and their
//! large-`t` growth coefficients.
//!
//! ```text
//! 𝔄(t,λ,β)   = λ/(β+λ)² · (β − β e^{−(β+λ)t} + (β+λ)λt)
//! 𝔅(t,λ,θ,δ) = λ² ∫₀ᵗ e^{−(λ+θ)y} ∫₀^{t−y} e^{−(λ+δ)v} ((λ(t−y−v)+2)² − 2) dv dy
//! ```

use crate::error::{ensure_finite, ensure_nonnegative, ensure_positive, Result};
use crate::numeric::{exp_remainder1, exp_remainder2, GaussLegendre};

/// Default Gauss–Legendre order per axis for the generic 𝔅 double integral.
pub const DEFAULT_FRAK_B_NODES: usize = 64;

/// Below this value of `(β+λ)t` 𝔄 is evaluated from its Taylor series.
const FRAK_A_SERIES_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrakAParams {
    pub t: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl FrakAParams {
    pub fn new(t: f64, lambda: f64, beta: f64) -> Result<Self> {
        ensure_nonnegative("t", t)?;
        ensure_positive("lambda", lambda)?;
        ensure_nonnegative("beta", beta)?;
        Ok(Self { t, lambda, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrakBParams {
    pub t: f64,
    pub lambda: f64,
    pub theta: f64,
    pub delta: f64,
}

impl FrakBParams {
    pub fn new(t: f64, lambda: f64, theta: f64, delta: f64) -> Result<Self> {
        ensure_nonnegative("t", t)?;
        ensure_positive("lambda", lambda)?;
        ensure_nonnegative("theta", theta)?;
        ensure_nonnegative("delta", delta)?;
        Ok(Self {
            t,
            lambda,
            theta,
            delta,
        })
    }
}

pub fn frak_a(p: FrakAParams) -> f64 {
    frak_a_raw(p.t, p.lambda, p.beta)
}

/// 𝔄 without argument validation; callers guarantee `t ≥ 0`, `λ > 0`, `β ≥ 0`.
pub(crate) fn frak_a_raw(t: f64, lambda: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let s = beta + lambda;
    let z = s * t;
    if z < FRAK_A_SERIES_CUTOFF {
        return lambda * t - 0.5 * lambda * beta * t * t + lambda * beta * s * t * t * t / 6.0;
    }
    lambda / (s * s) * (-beta * (-z).exp_m1()) + lambda * (lambda / s) * t
}

/// `λt − 𝔄(t,λ,β)`, computed without cancellation as `λβ/(β+λ)² · (e^{−z} − 1 + z)`.
pub(crate) fn frak_a_complement(t: f64, lambda: f64, beta: f64) -> f64 {
    if t == 0.0 || beta == 0.0 {
        return 0.0;
    }
    let s = beta + lambda;
    lambda * beta / (s * s) * exp_remainder1(s * t)
}

/// 𝔅, using the closed forms when `θ = δ` or one of them vanishes and nested
/// Gauss–Legendre quadrature with the default order otherwise.
pub fn frak_b(p: FrakBParams) -> f64 {
    frak_b_with_nodes(p, DEFAULT_FRAK_B_NODES)
}

pub fn frak_b_with_nodes(p: FrakBParams, nodes: usize) -> f64 {
    let FrakBParams {
        t,
        lambda,
        theta,
        delta,
    } = p;
    if t == 0.0 {
        return 0.0;
    }
    if theta == delta {
        frak_b_equal(t, lambda, theta)
    } else if theta == 0.0 {
        frak_b_one_sided(t, lambda, delta)
    } else if delta == 0.0 {
        frak_b_one_sided(t, lambda, theta)
    } else {
        frak_b_quadrature(p, nodes)
    }
}

/// 𝔅(t,λ,β,β), rearranged so that every `e^{−z}` correction is a remainder term.
fn frak_b_equal(t: f64, lambda: f64, beta: f64) -> f64 {
    let s = beta + lambda;
    let z = s * t;
    let r = lambda / s;
    let quadratic = (t * lambda * r).powi(2);
    if beta == 0.0 {
        return quadratic;
    }
    2.0 * beta * lambda * lambda / s.powi(4)
        * (beta * exp_remainder2(z) + 2.0 * lambda * exp_remainder1(z))
        + quadratic
}

/// 𝔅(t,λ,0,β).
fn frak_b_one_sided(t: f64, lambda: f64, beta: f64) -> f64 {
    let s = beta + lambda;
    let z = s * t;
    let quadratic = (t * lambda).powi(2) * (lambda / s);
    if beta == 0.0 {
        return quadratic;
    }
    2.0 * beta * lambda * lambda / s.powi(3) * exp_remainder1(z) + quadratic
}

/// Direct nested Gauss–Legendre evaluation of the defining double integral.
///
/// Both axes are split into panels no longer than a few decay lengths so the
/// exponential weight stays well resolved at large `t`.
pub fn frak_b_quadrature(p: FrakBParams, nodes: usize) -> f64 {
    let FrakBParams {
        t,
        lambda,
        theta,
        delta,
    } = p;
    if t == 0.0 {
        return 0.0;
    }
    let gl = GaussLegendre::new(nodes.max(2));
    let a = lambda + theta;
    let b = lambda + delta;
    let panels_for = |len: f64| ((a.max(b) * len / 8.0).ceil() as usize).clamp(1, 4096);
    let outer = gl.integrate_panels(0.0, t, panels_for(t), |y| {
        let rest = t - y;
        let inner = gl.integrate_panels(0.0, rest, panels_for(rest), |v| {
            let u = lambda * (rest - v) + 2.0;
            (-b * v).exp() * (u * u - 2.0)
        });
        (-a * y).exp() * inner
    });
    lambda * lambda * outer
}

/// `lim 𝔄(t,λ,β)/t = λ²/(β+λ)`.
pub fn frak_a_growth(lambda: f64, beta: f64) -> f64 {
    lambda * lambda / (beta + lambda)
}

/// Coefficients `(c, m)` with `𝔅(t,λ,θ,δ)/t = c + m·t + o(1)`.
pub fn frak_b_growth(lambda: f64, theta: f64, delta: f64) -> (f64, f64) {
    let a = lambda + theta;
    let b = lambda + delta;
    let ab = a * b;
    let l2 = lambda * lambda;
    let slope = l2 * l2 / ab;
    let constant = 4.0 * l2 * lambda / ab - 2.0 * l2 * l2 * (a + b) / (ab * ab);
    (constant, slope)
}

/// Validating wrapper around [`frak_b_growth`].
pub fn frak_b_growth_checked(lambda: f64, theta: f64, delta: f64) -> Result<(f64, f64)> {
    ensure_positive("lambda", lambda)?;
    ensure_finite("theta", theta)?;
    ensure_finite("delta", delta)?;
    ensure_positive("lambda + theta", lambda + theta)?;
    ensure_positive("lambda + delta", lambda + delta)?;
    Ok(frak_b_growth(lambda, theta, delta))
}
