//! Seeded Monte Carlo simulation of sample paths and moment estimates.
//!
//! Replicate `k` draws from its own ChaCha8 stream (`master_seed`, stream `k`),
//! so a plan produces the same paths and the same estimates whatever the number of
//! worker threads. Aggregates are collected in replicate order and summed with
//! compensated summation.

use std::sync::Arc;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::model::{DependenceModel, NhppInverse, ProcessSpec, SamplePath};
use crate::numeric::KahanSum;

/// Fewest replicates for which [`estimate_moments`] reports standard errors.
pub const MIN_REPLICATES: usize = 100;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.96;

#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub process: ProcessSpec,
    pub dependence: DependenceModel,
    pub horizon: f64,
    pub replicates: usize,
    pub master_seed: u64,
}

impl SimulationPlan {
    pub fn new(
        process: ProcessSpec,
        dependence: DependenceModel,
        horizon: f64,
        replicates: usize,
        master_seed: u64,
    ) -> Result<Self> {
        ensure_positive("t", horizon)?;
        if replicates == 0 {
            return Err(Error::invalid(
                "simulation.replicates",
                "must be at least 1",
            ));
        }
        Ok(Self {
            process,
            dependence,
            horizon,
            replicates,
            master_seed,
        })
    }

    /// Generator of replicate `k`.
    pub fn replicate_rng(&self, k: u64) -> ChaCha8Rng {
        replicate_rng(self.master_seed, k)
    }
}

/// Independent substream `k` derived from `master_seed`.
pub fn replicate_rng(master_seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(k);
    rng
}

/// Point estimate with its standard error and 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl MomentEstimate {
    fn new(value: f64, stderr: f64, replicates: usize, seed: u64) -> Self {
        Self {
            value,
            stderr,
            ci_low: value - Z_95 * stderr,
            ci_high: value + Z_95 * stderr,
            replicates,
            seed,
        }
    }

    /// `(reference − value) / stderr`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (reference - self.value) / self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimates {
    pub mean: MomentEstimate,
    pub second_moment: MomentEstimate,
    pub variance: MomentEstimate,
}

/// Draws `N(t)`.
pub fn sample_count<R: Rng + ?Sized>(process: &ProcessSpec, t: f64, rng: &mut R) -> usize {
    process.sample_count(t, rng)
}

/// Draws `n` sorted arrival times: i.i.d. from `F_t`, then sorted.
pub fn sample_arrivals<R: Rng + ?Sized>(
    process: &ProcessSpec,
    t: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ArrivalSampler::new(process, t)?.sample(n, rng)
}

/// Arrival-time sampler with the NHPP inverse cached.
#[derive(Debug, Clone)]
pub struct ArrivalSampler {
    t: f64,
    inverse: Option<Arc<NhppInverse>>,
}

impl ArrivalSampler {
    pub fn new(process: &ProcessSpec, t: f64) -> Result<Self> {
        ensure_nonnegative("t", t)?;
        let inverse = match process {
            ProcessSpec::NonHomogeneousPoisson(c) if t > 0.0 => {
                Some(Arc::new(NhppInverse::new(Arc::clone(c), t)?))
            }
            _ => None,
        };
        Ok(Self { t, inverse })
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut times = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            times.push(match &self.inverse {
                Some(inv) => inv.invert(u)?,
                None => self.t * u,
            });
        }
        times.sort_by(f64::total_cmp);
        Ok(times)
    }
}

/// Draws whole sample paths for a plan.
#[derive(Debug, Clone)]
pub struct PathSampler<'a> {
    plan: &'a SimulationPlan,
    arrivals: ArrivalSampler,
}

impl<'a> PathSampler<'a> {
    pub fn new(plan: &'a SimulationPlan) -> Result<Self> {
        Ok(Self {
            plan,
            arrivals: ArrivalSampler::new(&plan.process, plan.horizon)?,
        })
    }

    /// One path from `rng`: count, sorted arrivals, then one claim per arrival
    /// given its inter-claim time and previous arrival.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SamplePath> {
        let t = self.plan.horizon;
        let n = self.plan.process.sample_count(t, rng);
        let arrivals = self.arrivals.sample(n, rng)?;
        let mut claims = Vec::with_capacity(n);
        let mut prev = 0.0;
        for (k, &a) in arrivals.iter().enumerate() {
            claims.push(
                self.plan
                    .dependence
                    .sample_claim(k + 1, a - prev, prev, rng),
            );
            prev = a;
        }
        SamplePath::new(t, arrivals, claims)
    }

    /// Path of replicate `k`.
    pub fn replicate(&self, k: u64) -> Result<SamplePath> {
        self.sample_with(&mut self.plan.replicate_rng(k))
    }
}

/// `S(t)` for every replicate, in replicate order.
pub fn simulate_aggregates(plan: &SimulationPlan) -> Result<Vec<f64>> {
    let sampler = PathSampler::new(plan)?;
    (0..plan.replicates as u64)
        .into_par_iter()
        .map(|k| sampler.replicate(k).map(|p| p.aggregate()))
        .collect()
}

/// Monte Carlo estimates of `E[S(t)]`, `E[S(t)²]` and `Var[S(t)]`.
pub fn estimate_moments(plan: &SimulationPlan) -> Result<MomentEstimates> {
    match plan.replicates {
        1 => {
            return Err(Error::EstimationDegenerate(
                "a single replicate has no standard error".into(),
            ))
        }
        r if r < MIN_REPLICATES => {
            return Err(Error::invalid(
                "simulation.replicates",
                format!("must be at least {MIN_REPLICATES}, got {r}"),
            ))
        }
        _ => {}
    }
    let s = simulate_aggregates(plan)?;
    Ok(summarize(&s, plan.master_seed))
}

/// Estimates from a sample of aggregates (`len ≥ 2`).
pub fn summarize(s: &[f64], seed: u64) -> MomentEstimates {
    let r = s.len();
    let rf = r as f64;
    let mean = s.iter().copied().collect::<KahanSum>().value() / rf;
    let second = s.iter().map(|x| x * x).collect::<KahanSum>().value() / rf;

    let mut c2 = KahanSum::new();
    let mut c4 = KahanSum::new();
    let mut sq_dev = KahanSum::new();
    for &x in s {
        let d = x - mean;
        c2.add(d * d);
        c4.add(d.powi(4));
        let e = x * x - second;
        sq_dev.add(e * e);
    }
    let variance = c2.value() / (rf - 1.0);
    let m2 = c2.value() / rf;
    let m4 = c4.value() / rf;
    let var_of_var = ((m4 - m2 * m2) / rf).max(0.0);

    MomentEstimates {
        mean: MomentEstimate::new(mean, (variance / rf).sqrt(), r, seed),
        second_moment: MomentEstimate::new(
            second,
            (sq_dev.value() / (rf - 1.0) / rf).sqrt(),
            r,
            seed,
        ),
        variance: MomentEstimate::new(variance, var_of_var.sqrt(), r, seed),
    }
}
