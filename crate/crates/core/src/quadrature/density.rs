//! Joint densities of selected order statistics of `n` i.i.d. arrival times
//! with cdf `F_t` and density `f_t` on `[0, t]`.

use super::OsLaw;
use crate::error::{Error, Result};
use crate::model::ProcessSpec;
use crate::numeric::{ln_clamped, ln_fact, ln_pow, GaussLegendre};

/// Which order statistics the density describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityKind {
    /// `T_1`.
    First,
    /// `(T_{i-1}, T_i)`, `2 ≤ i ≤ n`.
    ConsecutivePair,
    /// `(T_1, T_{j-1}, T_j)`, `3 ≤ j ≤ n`.
    FirstPlusPair,
    /// `(T_{i-1}, T_i, T_{i+1})`, `2 ≤ i ≤ n-1`.
    TripleConsecutive,
    /// `(T_{i-1}, T_i, T_{j-1}, T_j)`, `2 ≤ i`, `i + 2 ≤ j ≤ n`.
    DoublePair,
}

impl DensityKind {
    pub const ALL: [DensityKind; 5] = [
        DensityKind::First,
        DensityKind::ConsecutivePair,
        DensityKind::FirstPlusPair,
        DensityKind::TripleConsecutive,
        DensityKind::DoublePair,
    ];

    pub fn dim(self) -> usize {
        match self {
            Self::First => 1,
            Self::ConsecutivePair => 2,
            Self::FirstPlusPair | Self::TripleConsecutive => 3,
            Self::DoublePair => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::First => "first",
            Self::ConsecutivePair => "consecutive-pair",
            Self::FirstPlusPair => "first-plus-pair",
            Self::TripleConsecutive => "triple-consecutive",
            Self::DoublePair => "double-pair",
        }
    }

    /// Every valid `(i, j)` for sample size `n`; unused indices are reported as 0.
    pub fn valid_indices(self, n: usize) -> Vec<(usize, usize)> {
        match self {
            Self::First => {
                if n >= 1 {
                    vec![(1, 0)]
                } else {
                    vec![]
                }
            }
            Self::ConsecutivePair => (2..=n).map(|i| (i, 0)).collect(),
            Self::FirstPlusPair => (3..=n).map(|j| (1, j)).collect(),
            Self::TripleConsecutive => (2..n).map(|i| (i, 0)).collect(),
            Self::DoublePair => (2..=n)
                .flat_map(|i| (i + 2..=n).map(move |j| (i, j)))
                .collect(),
        }
    }
}

/// One order-statistic density, evaluated at points `x_1 ≤ … ≤ x_d` in `[0, t]`.
#[derive(Debug, Clone)]
pub struct OrderStatDensity {
    kind: DensityKind,
    i: usize,
    j: usize,
    n: usize,
    t: f64,
    law: OsLaw,
    /// Exponents of `F(x_1)`, `F(x_{k+1}) − F(x_k)` at the gap between the pairs,
    /// and `1 − F(x_d)`.
    before: usize,
    between: usize,
    after: usize,
    ln_coef: f64,
}

impl OrderStatDensity {
    pub fn new(
        kind: DensityKind,
        i: usize,
        j: usize,
        n: usize,
        process: &ProcessSpec,
        t: f64,
    ) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", "must be positive and finite"));
        }
        let valid = match kind {
            DensityKind::First => n >= 1,
            DensityKind::ConsecutivePair => i >= 2 && i <= n,
            DensityKind::FirstPlusPair => j >= 3 && j <= n,
            DensityKind::TripleConsecutive => i >= 2 && i < n,
            DensityKind::DoublePair => i >= 2 && j >= i + 2 && j <= n,
        };
        if !valid {
            return Err(Error::invalid(
                "indices",
                format!(
                    "(i={i}, j={j}, n={n}) not valid for {} density",
                    kind.name()
                ),
            ));
        }
        let (before, between, after) = match kind {
            DensityKind::First => (0, 0, n - 1),
            DensityKind::ConsecutivePair => (i - 2, 0, n - i),
            DensityKind::FirstPlusPair => (0, j - 3, n - j),
            DensityKind::TripleConsecutive => (i - 2, 0, n - i - 1),
            DensityKind::DoublePair => (i - 2, j - i - 2, n - j),
        };
        let ln_coef = ln_fact(n) - ln_fact(before) - ln_fact(between) - ln_fact(after);
        Ok(Self {
            kind,
            i,
            j,
            n,
            t,
            law: OsLaw::new(process, t)?,
            before,
            between,
            after,
            ln_coef,
        })
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn indices(&self) -> (usize, usize, usize) {
        (self.i, self.j, self.n)
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Density at `point` (length [`dim`](Self::dim)); zero outside the ordered region.
    pub fn value(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dim(), "point has wrong dimension");
        if point[0] < 0.0
            || point[point.len() - 1] > self.t
            || point.windows(2).any(|w| w[1] < w[0])
        {
            return 0.0;
        }
        let f: f64 = point.iter().map(|&x| self.law.density(x)).product();
        if f == 0.0 {
            return 0.0;
        }
        let first = self.law.cdf(point[0]);
        let last = self.law.cdf(point[point.len() - 1]);
        // The "between" gap sits before the last pair (first-plus-pair: between
        // T_1 and T_{j-1}; double-pair: between T_i and T_{j-1}).
        let gap = match self.kind {
            DensityKind::FirstPlusPair => self.law.cdf(point[1]) - first,
            DensityKind::DoublePair => self.law.cdf(point[2]) - self.law.cdf(point[1]),
            _ => 1.0,
        };
        let ln = self.ln_coef
            + ln_pow(ln_clamped(first), self.before)
            + ln_pow(ln_clamped(gap.max(0.0)), self.between)
            + ln_pow(ln_clamped(1.0 - last), self.after);
        f * ln.exp()
    }

    /// Integral of the density over its ordered region by nested Gauss–Legendre
    /// with `nodes` points per axis.
    pub fn total_mass(&self, nodes: usize) -> f64 {
        let gl = GaussLegendre::new(nodes.max(1));
        let mut point = vec![0.0; self.dim()];
        self.nest(&gl, 0, 0.0, &mut point)
    }

    fn nest(&self, gl: &GaussLegendre, depth: usize, lo: f64, point: &mut Vec<f64>) -> f64 {
        if depth == point.len() {
            return self.value(point);
        }
        let mut acc = 0.0;
        for (x, w) in gl.mapped(lo, self.t) {
            point[depth] = x;
            acc += w * self.nest(gl, depth + 1, x, point);
        }
        acc
    }
}
