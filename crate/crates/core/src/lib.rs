//! Moments of aggregate claims `S(t)` when arrivals form an order-statistic point
//! process and each claim size depends on the time elapsed since the previous claim.
//!
//! Three engines compute `E[S(t)]`, `E[S(t)²]` and `Var[S(t)]`:
//! closed forms for mixed Poisson arrivals with exponential-mixture dependence
//! ([`closed`]), nested quadrature of the general series representations
//! ([`quadrature`]), and seeded Monte Carlo ([`simulate`]).

pub mod closed;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod numeric;
pub mod quadrature;
pub mod simulate;
pub mod special_forms;

pub use error::{Error, Result};
pub use model::{
    Atom, CumulativeIntensity, DependenceModel, GapTable, LinearIntensity, PowerLawIntensity,
    ProcessSpec, SamplePath, SeverityLaw, SinusoidalIntensity, StructureDistribution, TimeGapTable,
};
pub use quadrature::{Evaluation, QuadratureConfig};
pub use simulate::{MomentEstimate, MomentEstimates, SimulationPlan};
