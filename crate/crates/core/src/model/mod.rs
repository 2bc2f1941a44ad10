//! Domain types shared by every engine.

mod dependence;
mod path;
mod process;
mod severity;
mod structure;

pub use dependence::{DependenceModel, GapTable, MomentKernel, MomentOrder, TimeGapTable};
pub use path::SamplePath;
pub use process::{
    CountSeries, CumulativeIntensity, LinearIntensity, NhppInverse, PowerLawIntensity, ProcessSpec,
    SinusoidalIntensity, MIN_TRUNCATION,
};
pub use severity::SeverityLaw;
pub use structure::{Atom, StructureDistribution, STRUCTURE_REL_TOL, TABULATED_MASS_TOL};
