use rand::{Rng, RngExt};

use super::severity::SeverityLaw;
use crate::error::{ensure_nonnegative, Error, Result};

/// Piecewise-linear conditional moments `Δ(v)`, `Θ(v)` of a claim given its
/// inter-claim time, flat beyond the end knots.
///
/// `index_scale[i-1]` multiplies claim `i` (the last entry repeats; empty means 1), so
/// `Δ_i(v) = s_i Δ(v)` and `Θ_i(v) = s_i² Θ(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    pub gaps: Vec<f64>,
    pub means: Vec<f64>,
    pub second_moments: Vec<f64>,
    pub index_scale: Vec<f64>,
}

/// Bilinear conditional moments over (previous arrival time, inter-claim time).
/// `means[r * gaps.len() + c]` belongs to `(prev_times[r], gaps[c])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGapTable {
    pub prev_times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub means: Vec<f64>,
    pub second_moments: Vec<f64>,
    pub index_scale: Vec<f64>,
}

/// How claim `X_i` couples to `(T_{i-1}, V_i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DependenceModel {
    /// Claim drawn from `large` with probability `1 - e^{-β V_i}`, else from `small`.
    ExponentialMixture {
        beta: f64,
        large: SeverityLaw,
        small: SeverityLaw,
    },
    Independent(SeverityLaw),
    TabulatedV(GapTable),
    TabulatedTV(TimeGapTable),
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(name, "grid must not be empty"));
    }
    for &g in grid {
        ensure_nonnegative(name, g)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}

fn check_moments(means: &[f64], seconds: &[f64], len: usize) -> Result<()> {
    if means.len() != len {
        return Err(Error::invalid(
            "dependence.means",
            format!("expected {len} values, got {}", means.len()),
        ));
    }
    if seconds.len() != len {
        return Err(Error::invalid(
            "dependence.second_moments",
            format!("expected {len} values, got {}", seconds.len()),
        ));
    }
    for (&m, &s) in means.iter().zip(seconds) {
        ensure_nonnegative("dependence.means", m)?;
        ensure_nonnegative("dependence.second_moments", s)?;
        if s < m * m * (1.0 - 1e-12) {
            return Err(Error::invalid(
                "dependence.second_moments",
                format!("second moment {s} is below squared mean {}", m * m),
            ));
        }
    }
    Ok(())
}

fn check_scale(scale: &[f64]) -> Result<()> {
    for &s in scale {
        ensure_nonnegative("dependence.index_scale", s)?;
    }
    Ok(())
}

/// Index of the segment containing `x` and the interpolation weight, flat outside.
fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    if grid.len() == 1 || x <= grid[0] {
        return (0, 0.0);
    }
    let last = grid.len() - 1;
    if x >= grid[last] {
        return (last - 1, 1.0);
    }
    let k = grid.partition_point(|&g| g <= x).clamp(1, last);
    let w = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
    (k - 1, w)
}

fn interp(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if grid.len() == 1 {
        return values[0];
    }
    let (k, w) = locate(grid, x);
    values[k] + w * (values[k + 1] - values[k])
}

fn interp2(rows: &[f64], cols: &[f64], values: &[f64], r: f64, c: f64) -> f64 {
    let nc = cols.len();
    let at = |i: usize, j: usize| values[i * nc + j];
    let (ri, rw) = if rows.len() == 1 {
        (0, 0.0)
    } else {
        locate(rows, r)
    };
    let (ci, cw) = if nc == 1 { (0, 0.0) } else { locate(cols, c) };
    let ri1 = if rows.len() == 1 { 0 } else { ri + 1 };
    let ci1 = if nc == 1 { 0 } else { ci + 1 };
    let top = at(ri, ci) + cw * (at(ri, ci1) - at(ri, ci));
    let bottom = at(ri1, ci) + cw * (at(ri1, ci1) - at(ri1, ci));
    top + rw * (bottom - top)
}

fn scale_for(scale: &[f64], i: usize) -> f64 {
    match scale.len() {
        0 => 1.0,
        len => scale[(i.max(1) - 1).min(len - 1)],
    }
}

impl GapTable {
    pub fn new(
        gaps: Vec<f64>,
        means: Vec<f64>,
        second_moments: Vec<f64>,
        index_scale: Vec<f64>,
    ) -> Result<Self> {
        check_grid("dependence.gaps", &gaps)?;
        check_moments(&means, &second_moments, gaps.len())?;
        check_scale(&index_scale)?;
        Ok(Self {
            gaps,
            means,
            second_moments,
            index_scale,
        })
    }

    pub fn mean(&self, v: f64) -> f64 {
        interp(&self.gaps, &self.means, v)
    }

    pub fn second_moment(&self, v: f64) -> f64 {
        interp(&self.gaps, &self.second_moments, v)
    }
}

impl TimeGapTable {
    pub fn new(
        prev_times: Vec<f64>,
        gaps: Vec<f64>,
        means: Vec<f64>,
        second_moments: Vec<f64>,
        index_scale: Vec<f64>,
    ) -> Result<Self> {
        check_grid("dependence.prev_times", &prev_times)?;
        check_grid("dependence.gaps", &gaps)?;
        check_moments(&means, &second_moments, prev_times.len() * gaps.len())?;
        check_scale(&index_scale)?;
        Ok(Self {
            prev_times,
            gaps,
            means,
            second_moments,
            index_scale,
        })
    }

    pub fn mean(&self, prev: f64, v: f64) -> f64 {
        interp2(&self.prev_times, &self.gaps, &self.means, prev, v)
    }

    pub fn second_moment(&self, prev: f64, v: f64) -> f64 {
        interp2(&self.prev_times, &self.gaps, &self.second_moments, prev, v)
    }
}

/// Which conditional moments an engine needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MomentOrder {
    First,
    Second,
}

impl DependenceModel {
    pub fn exponential_mixture(beta: f64, large: SeverityLaw, small: SeverityLaw) -> Result<Self> {
        ensure_nonnegative("dependence.beta", beta)?;
        Ok(Self::ExponentialMixture {
            beta,
            large: large.validated()?,
            small: small.validated()?,
        })
    }

    pub fn independent(law: SeverityLaw) -> Result<Self> {
        Ok(Self::Independent(law.validated()?))
    }

    /// True when claim sizes ignore the previous arrival time.
    pub fn is_gap_only(&self) -> bool {
        !matches!(self, Self::TabulatedTV(_))
    }

    /// True when every claim has the same conditional law.
    pub fn is_index_invariant(&self) -> bool {
        let scale = match self {
            Self::TabulatedV(t) => &t.index_scale,
            Self::TabulatedTV(t) => &t.index_scale,
            _ => return true,
        };
        scale
            .iter()
            .all(|&s| s == scale.first().copied().unwrap_or(1.0))
            && scale.first().is_none_or(|&s| s == 1.0)
    }

    /// Inter-claim times where the conditional moments have kinks.
    pub fn gap_knots(&self) -> &[f64] {
        match self {
            Self::TabulatedV(t) => &t.gaps,
            Self::TabulatedTV(t) => &t.gaps,
            _ => &[],
        }
    }

    /// Multiplier `s_i` of claim `i` (1-based).
    pub fn index_scale(&self, i: usize) -> f64 {
        match self {
            Self::TabulatedV(t) => scale_for(&t.index_scale, i),
            Self::TabulatedTV(t) => scale_for(&t.index_scale, i),
            _ => 1.0,
        }
    }

    /// `Δ_i(v) = E[X_i | V_i = v]` (and `T_{i-1} = prev` for time-dependent tables).
    pub fn delta(&self, i: usize, v: f64, prev: Option<f64>) -> Result<f64> {
        ensure_nonnegative("v", v)?;
        Ok(self
            .kernel(MomentOrder::First)?
            .mean(i, prev.unwrap_or(0.0), v))
    }

    /// `Θ_i(v) = E[X_i² | V_i = v]`.
    pub fn theta(&self, i: usize, v: f64, prev: Option<f64>) -> Result<f64> {
        ensure_nonnegative("v", v)?;
        Ok(self
            .kernel(MomentOrder::Second)?
            .second(i, prev.unwrap_or(0.0), v))
    }

    /// Conditional-moment evaluator with severity moments resolved up front.
    pub fn kernel(&self, order: MomentOrder) -> Result<MomentKernel<'_>> {
        let second = order == MomentOrder::Second;
        let pair = |law: &SeverityLaw| -> Result<(f64, f64)> {
            let m1 = law.moment(1)?;
            let m2 = if second { law.moment(2)? } else { f64::NAN };
            Ok((m1, m2))
        };
        let (large, small, beta) = match self {
            Self::ExponentialMixture { beta, large, small } => (pair(large)?, pair(small)?, *beta),
            Self::Independent(law) => {
                let p = pair(law)?;
                (p, p, 0.0)
            }
            _ => ((0.0, 0.0), (0.0, 0.0), 0.0),
        };
        Ok(MomentKernel {
            model: self,
            beta,
            large,
            small,
        })
    }

    /// Draws claim `i` given its inter-claim time `v` and previous arrival `prev`.
    ///
    /// Tabulated models draw from the gamma law matching the tabulated mean and
    /// second moment (a point mass when the conditional variance vanishes).
    pub fn sample_claim<R: Rng + ?Sized>(&self, i: usize, v: f64, prev: f64, rng: &mut R) -> f64 {
        match self {
            Self::ExponentialMixture { beta, large, small } => {
                let u_mix: f64 = rng.random();
                let u_size: f64 = rng.random();
                let p_large = -(-beta * v).exp_m1();
                if u_mix < p_large {
                    large.inverse_cdf(u_size)
                } else {
                    small.inverse_cdf(u_size)
                }
            }
            Self::Independent(law) => {
                let u: f64 = rng.random();
                law.inverse_cdf(u)
            }
            Self::TabulatedV(table) => {
                let u: f64 = rng.random();
                scale_for(&table.index_scale, i)
                    * moment_matched(table.mean(v), table.second_moment(v), u)
            }
            Self::TabulatedTV(table) => {
                let u: f64 = rng.random();
                scale_for(&table.index_scale, i)
                    * moment_matched(table.mean(prev, v), table.second_moment(prev, v), u)
            }
        }
    }
}

fn moment_matched(mean: f64, second: f64, u: f64) -> f64 {
    let var = second - mean * mean;
    if mean <= 0.0 {
        return 0.0;
    }
    if var <= 1e-14 * mean * mean {
        return mean;
    }
    SeverityLaw::Gamma {
        shape: mean * mean / var,
        scale: var / mean,
    }
    .inverse_cdf(u)
}

/// Conditional moments of a [`DependenceModel`] with the severity moments cached.
#[derive(Debug, Clone, Copy)]
pub struct MomentKernel<'a> {
    model: &'a DependenceModel,
    beta: f64,
    large: (f64, f64),
    small: (f64, f64),
}

impl MomentKernel<'_> {
    pub fn model(&self) -> &DependenceModel {
        self.model
    }

    /// Base conditional mean `Δ(prev, v)` before the index multiplier.
    #[inline]
    pub fn base_mean(&self, prev: f64, v: f64) -> f64 {
        match self.model {
            DependenceModel::ExponentialMixture { .. } | DependenceModel::Independent(_) => {
                let w = (-self.beta * v).exp();
                (1.0 - w) * self.large.0 + w * self.small.0
            }
            DependenceModel::TabulatedV(t) => t.mean(v),
            DependenceModel::TabulatedTV(t) => t.mean(prev, v),
        }
    }

    /// Base conditional second moment `Θ(prev, v)`.
    #[inline]
    pub fn base_second(&self, prev: f64, v: f64) -> f64 {
        match self.model {
            DependenceModel::ExponentialMixture { .. } | DependenceModel::Independent(_) => {
                let w = (-self.beta * v).exp();
                (1.0 - w) * self.large.1 + w * self.small.1
            }
            DependenceModel::TabulatedV(t) => t.second_moment(v),
            DependenceModel::TabulatedTV(t) => t.second_moment(prev, v),
        }
    }

    #[inline]
    pub fn scale(&self, i: usize) -> f64 {
        self.model.index_scale(i)
    }

    #[inline]
    pub fn mean(&self, i: usize, prev: f64, v: f64) -> f64 {
        self.scale(i) * self.base_mean(prev, v)
    }

    #[inline]
    pub fn second(&self, i: usize, prev: f64, v: f64) -> f64 {
        let s = self.scale(i);
        s * s * self.base_second(prev, v)
    }

    fn max_scale(&self) -> f64 {
        let scale = match self.model {
            DependenceModel::TabulatedV(t) => &t.index_scale,
            DependenceModel::TabulatedTV(t) => &t.index_scale,
            _ => return 1.0,
        };
        scale
            .iter()
            .copied()
            .fold(if scale.is_empty() { 1.0 } else { 0.0 }, f64::max)
    }

    /// Upper bound of `Δ_i` over all `i`, `prev`, `v`.
    pub fn mean_bound(&self) -> f64 {
        let base = match self.model {
            DependenceModel::TabulatedV(t) => t.means.iter().copied().fold(0.0, f64::max),
            DependenceModel::TabulatedTV(t) => t.means.iter().copied().fold(0.0, f64::max),
            _ => self.large.0.max(self.small.0),
        };
        base * self.max_scale()
    }

    /// Upper bound of `Θ_i` over all `i`, `prev`, `v`.
    pub fn second_bound(&self) -> f64 {
        let base = match self.model {
            DependenceModel::TabulatedV(t) => t.second_moments.iter().copied().fold(0.0, f64::max),
            DependenceModel::TabulatedTV(t) => t.second_moments.iter().copied().fold(0.0, f64::max),
            _ => self.large.1.max(self.small.1),
        };
        base * self.max_scale().powi(2)
    }
}
