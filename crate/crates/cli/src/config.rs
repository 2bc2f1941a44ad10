//! Run configuration: model, horizon grid, engine selection and output options.
//!
//! Every key is consumed exactly once; anything left over after parsing a section
//! is reported as unknown, and every numeric value is range-checked by the model
//! constructors before any engine runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use osclaims::{
    DependenceModel, GapTable, LinearIntensity, PowerLawIntensity, ProcessSpec, QuadratureConfig,
    SeverityLaw, SinusoidalIntensity, StructureDistribution, TimeGapTable,
};

use crate::ini::{self, Entry, Sections};

/// A configuration problem, tied to the key that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    Closed,
    Quadrature,
    Simulate,
    All,
}

impl FromStr for EngineChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed" => Ok(Self::Closed),
            "quadrature" => Ok(Self::Quadrature),
            "simulate" => Ok(Self::Simulate),
            "all" => Ok(Self::All),
            _ => Err(format!(
                "unknown engine `{s}` (expected closed, quadrature, simulate or all)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub format: Format,
    pub path: Option<PathBuf>,
    /// Significant digits of every number in the report.
    pub precision: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateConfig {
    /// Largest relative difference allowed between deterministic engines.
    pub rel_tol: f64,
    /// Largest `|z|` allowed between Monte Carlo and a deterministic engine.
    pub z_max: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub process: ProcessSpec,
    pub dependence: DependenceModel,
    pub grid: Vec<f64>,
    pub engine: EngineChoice,
    pub quadrature: QuadratureConfig,
    pub replicates: usize,
    pub seed: u64,
    pub output: OutputConfig,
    pub validate: ValidateConfig,
}

impl RunConfig {
    pub fn from_str_checked(text: &str) -> Result<Self, ConfigError> {
        let mut sections = ini::parse(text)?;
        let known = ["process", "dependence", "computation", "output", "validate"];
        if let Some(name) = sections.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(ConfigError::new(name.clone(), "unknown section"));
        }
        let mut process = Section::take(&mut sections, "process", true);
        let mut dependence = Section::take(&mut sections, "dependence", true);
        let mut computation = Section::take(&mut sections, "computation", true);
        let mut output = Section::take(&mut sections, "output", false);
        let mut validate = Section::take(&mut sections, "validate", false);

        let cfg = Self {
            process: parse_process(&mut process)?,
            dependence: parse_dependence(&mut dependence)?,
            grid: parse_grid(&mut computation)?,
            engine: computation.parsed_or("engine", EngineChoice::All)?,
            quadrature: parse_quadrature(&mut computation)?,
            replicates: computation.parsed_or("simulation.replicates", 100_000)?,
            seed: computation.parsed_or("simulation.seed", 0x5eed)?,
            output: OutputConfig {
                format: output.parsed_or("format", Format::Csv)?,
                path: output.optional("path").map(PathBuf::from),
                precision: output.parsed_or("precision", 17)?,
            },
            validate: ValidateConfig {
                rel_tol: validate.parsed_or("rel_tol", 1e-5)?,
                z_max: validate.parsed_or("z_max", 4.0)?,
            },
        };
        for s in [process, dependence, computation, output, validate] {
            s.finish()?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.replicates < osclaims::simulate::MIN_REPLICATES {
            return Err(ConfigError::new(
                "computation.simulation.replicates",
                format!("must be at least {}", osclaims::simulate::MIN_REPLICATES),
            ));
        }
        if !(1..=17).contains(&self.output.precision) {
            return Err(ConfigError::new("output.precision", "must lie in 1..=17"));
        }
        if !(self.validate.rel_tol > 0.0 && self.validate.rel_tol.is_finite()) {
            return Err(ConfigError::new("validate.rel_tol", "must be positive"));
        }
        if !(self.validate.z_max > 0.0 && self.validate.z_max.is_finite()) {
            return Err(ConfigError::new("validate.z_max", "must be positive"));
        }
        self.quadrature
            .validate()
            .map_err(|e| core_error("computation", e))?;
        Ok(())
    }
}

/// Maps a model validation error onto the config key it names.
fn core_error(section: &str, e: osclaims::Error) -> ConfigError {
    match e {
        osclaims::Error::InvalidParameter { name, reason } => {
            // Model errors are named `<group>.<field>`; the group is replaced by
            // the section the value came from.
            let field = if name.starts_with("quadrature.") {
                name.as_str()
            } else {
                name.split_once('.').map_or(name.as_str(), |(_, f)| f)
            };
            ConfigError::new(format!("{section}.{field}"), reason)
        }
        other => ConfigError::new(section, other.to_string()),
    }
}

/// Keys of one section, tracking which were consumed.
struct Section {
    name: String,
    entries: BTreeMap<String, Entry>,
    present: bool,
}

impl Section {
    fn take(sections: &mut Sections, name: &str, required: bool) -> Self {
        let entries = sections.remove(name);
        let present = entries.is_some() || !required;
        Self {
            name: name.to_string(),
            entries: entries.unwrap_or_default(),
            present,
        }
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn optional(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    fn required(&mut self, key: &str) -> Result<String, ConfigError> {
        if !self.present {
            return Err(ConfigError::new(self.name.clone(), "missing section"));
        }
        self.optional(key)
            .ok_or_else(|| ConfigError::new(self.key(key), "missing"))
    }

    fn parse_value<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        raw.parse::<T>()
            .map_err(|e| ConfigError::new(self.key(key), format!("cannot parse `{raw}`: {e}")))
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.required(key)?;
        self.parse_value(key, &raw)
    }

    fn parsed_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.optional(key) {
            Some(raw) => self.parse_value(key, &raw),
            None => Ok(default),
        }
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.required(key)?;
        self.parse_list(key, &raw)
    }

    fn list_or_empty(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self.optional(key) {
            Some(raw) => self.parse_list(key, &raw),
            None => Ok(Vec::new()),
        }
    }

    fn parse_list(&self, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
        raw.split(',')
            .map(|s| self.parse_value(key, s.trim()))
            .collect()
    }

    /// Wraps a model constructor error with this section's name.
    fn model<T>(&self, r: osclaims::Result<T>) -> Result<T, ConfigError> {
        r.map_err(|e| core_error(&self.name, e))
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().next() {
            Some((key, entry)) => Err(ConfigError::new(
                format!("{}.{key}", self.name),
                format!("unknown key (line {})", entry.line),
            )),
            None => Ok(()),
        }
    }
}

fn parse_process(s: &mut Section) -> Result<ProcessSpec, ConfigError> {
    let kind = s.required("kind")?;
    let structure = |s: &mut Section, st: osclaims::Result<StructureDistribution>| {
        s.model(st).map(ProcessSpec::mixed)
    };
    match kind.as_str() {
        "homogeneous_poisson" => {
            let rate = s.parsed("rate")?;
            s.model(ProcessSpec::homogeneous(rate))
        }
        "mixed_poisson_degenerate" => {
            let rate = s.parsed("rate")?;
            structure(s, StructureDistribution::degenerate(rate))
        }
        "mixed_poisson_atoms" => {
            let rates = s.list("rates")?;
            let probs = s.list("probs")?;
            if rates.len() != probs.len() {
                return Err(ConfigError::new(
                    s.key("probs"),
                    "needs one probability per rate",
                ));
            }
            structure(
                s,
                StructureDistribution::finite_atoms(rates.into_iter().zip(probs)),
            )
        }
        "mixed_poisson_gamma" => {
            let shape = s.parsed("shape")?;
            let rate = s.parsed("rate")?;
            structure(s, StructureDistribution::gamma(shape, rate))
        }
        "mixed_poisson_tabulated" => {
            let lambdas = s.list("lambdas")?;
            let densities = s.list("densities")?;
            if lambdas.len() != densities.len() {
                return Err(ConfigError::new(
                    s.key("densities"),
                    "needs one density per lambda",
                ));
            }
            structure(
                s,
                StructureDistribution::tabulated(lambdas.into_iter().zip(densities).collect()),
            )
        }
        "nhpp_power" => {
            let scale = s.parsed("scale")?;
            let exponent = s.parsed("exponent")?;
            Ok(ProcessSpec::nhpp(
                s.model(PowerLawIntensity::new(scale, exponent))?,
            ))
        }
        "nhpp_linear" => {
            let base = s.parsed("base")?;
            let slope = s.parsed("slope")?;
            Ok(ProcessSpec::nhpp(
                s.model(LinearIntensity::new(base, slope))?,
            ))
        }
        "nhpp_sinusoidal" => {
            let base = s.parsed("base")?;
            let amplitude = s.parsed("amplitude")?;
            let period = s.parsed("period")?;
            Ok(ProcessSpec::nhpp(s.model(SinusoidalIntensity::new(
                base, amplitude, period,
            ))?))
        }
        other => Err(ConfigError::new(
            s.key("kind"),
            format!("unknown process kind `{other}`"),
        )),
    }
}

fn parse_severity(s: &mut Section, prefix: &str) -> Result<SeverityLaw, ConfigError> {
    let kind = s.required(prefix)?;
    let key = |k: &str| format!("{prefix}.{k}");
    let law = match kind.as_str() {
        "exponential" => SeverityLaw::exponential(s.parsed(&key("mean"))?),
        "gamma" => {
            let shape = s.parsed(&key("shape"))?;
            SeverityLaw::gamma(shape, s.parsed(&key("scale"))?)
        }
        "lognormal" => {
            let mu = s.parsed(&key("mu"))?;
            SeverityLaw::lognormal(mu, s.parsed(&key("sigma"))?)
        }
        "pareto" => {
            let shape = s.parsed(&key("shape"))?;
            SeverityLaw::pareto(shape, s.parsed(&key("scale"))?)
        }
        "point_mass" => SeverityLaw::point_mass(s.parsed(&key("value"))?),
        other => {
            return Err(ConfigError::new(
                s.key(prefix),
                format!("unknown severity law `{other}`"),
            ))
        }
    };
    law.map_err(|e| core_error(&s.key(prefix), e))
}

fn parse_dependence(s: &mut Section) -> Result<DependenceModel, ConfigError> {
    let kind = s.required("kind")?;
    match kind.as_str() {
        "exponential_mixture" => {
            let beta = s.parsed("beta")?;
            let large = parse_severity(s, "large")?;
            let small = parse_severity(s, "small")?;
            s.model(DependenceModel::exponential_mixture(beta, large, small))
        }
        "independent" => {
            let law = parse_severity(s, "severity")?;
            s.model(DependenceModel::independent(law))
        }
        "tabulated_v" => {
            let table = GapTable::new(
                s.list("gaps")?,
                s.list("means")?,
                s.list("second_moments")?,
                s.list_or_empty("index_scale")?,
            );
            Ok(DependenceModel::TabulatedV(s.model(table)?))
        }
        "tabulated_tv" => {
            let table = TimeGapTable::new(
                s.list("prev_times")?,
                s.list("gaps")?,
                s.list("means")?,
                s.list("second_moments")?,
                s.list_or_empty("index_scale")?,
            );
            Ok(DependenceModel::TabulatedTV(s.model(table)?))
        }
        other => Err(ConfigError::new(
            s.key("kind"),
            format!("unknown dependence kind `{other}`"),
        )),
    }
}

fn parse_grid(s: &mut Section) -> Result<Vec<f64>, ConfigError> {
    if let Some(raw) = s.optional("t") {
        for k in ["t.start", "t.stop", "t.count", "t.spacing"] {
            if s.entries.contains_key(k) {
                return Err(ConfigError::new(s.key(k), "conflicts with `t`"));
            }
        }
        let grid = s.parse_list("t", &raw)?;
        for &t in &grid {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::new(
                    s.key("t"),
                    format!("{t} is not a positive horizon"),
                ));
            }
        }
        return Ok(grid);
    }
    let start: f64 = s.parsed("t.start")?;
    let stop: f64 = s.parsed("t.stop")?;
    let count: usize = s.parsed("t.count")?;
    let spacing = s.optional("t.spacing").unwrap_or_else(|| "linear".into());
    if !(start > 0.0 && start.is_finite()) {
        return Err(ConfigError::new(s.key("t.start"), "must be positive"));
    }
    if !(stop >= start && stop.is_finite()) {
        return Err(ConfigError::new(
            s.key("t.stop"),
            "must be finite and ≥ t.start",
        ));
    }
    if count == 0 || (count == 1 && stop != start) {
        return Err(ConfigError::new(
            s.key("t.count"),
            "must be ≥ 1, and ≥ 2 unless t.stop = t.start",
        ));
    }
    let frac = |k: usize| {
        if count == 1 {
            0.0
        } else {
            k as f64 / (count - 1) as f64
        }
    };
    match spacing.as_str() {
        "linear" => Ok((0..count)
            .map(|k| start + (stop - start) * frac(k))
            .collect()),
        "log" => {
            let (a, b) = (start.ln(), stop.ln());
            let mut grid: Vec<f64> = (0..count).map(|k| (a + (b - a) * frac(k)).exp()).collect();
            grid[0] = start;
            grid[count - 1] = stop;
            Ok(grid)
        }
        other => Err(ConfigError::new(
            s.key("t.spacing"),
            format!("unknown spacing `{other}` (expected linear or log)"),
        )),
    }
}

fn parse_quadrature(s: &mut Section) -> Result<QuadratureConfig, ConfigError> {
    let d = QuadratureConfig::default();
    Ok(QuadratureConfig {
        nodes_per_axis: s.parsed_or("quadrature.nodes", d.nodes_per_axis)?,
        tail_epsilon: s.parsed_or("quadrature.tail_epsilon", d.tail_epsilon)?,
        n_cap: s.parsed_or("quadrature.n_cap", d.n_cap)?,
        dim_cap: s.parsed_or("quadrature.dim_cap", d.dim_cap)?,
        mc_fallback_samples: s.parsed_or("quadrature.mc_samples", d.mc_fallback_samples)?,
        tensor4_nodes: s.parsed_or("quadrature.tensor4_nodes", d.tensor4_nodes)?,
        qmc_seed: s.parsed_or("quadrature.qmc_seed", d.qmc_seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BENCH: &str = "\
[process]
kind = mixed_poisson_degenerate
rate = 1

[dependence]
kind = exponential_mixture
beta = 1
large = exponential
large.mean = 10
small = exponential
small.mean = 1

[computation]
t = 0.5, 1, 2
";

    #[test]
    fn parses_benchmark() {
        let cfg = RunConfig::from_str_checked(BENCH).unwrap();
        assert_eq!(cfg.grid, vec![0.5, 1.0, 2.0]);
        assert_eq!(cfg.engine, EngineChoice::All);
        assert_eq!(cfg.output.format, Format::Csv);
        assert_eq!(cfg.quadrature, QuadratureConfig::default());
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let text = BENCH.replace(
            "t = 0.5, 1, 2",
            "t.start = 1\nt.stop = 1000\nt.count = 4\nt.spacing = log",
        );
        let cfg = RunConfig::from_str_checked(&text).unwrap();
        assert_eq!(cfg.grid.len(), 4);
        assert!((cfg.grid[1] - 10.0).abs() < 1e-12);
        assert_eq!(cfg.grid[3], 1000.0);
    }

    #[test]
    fn rejections_name_the_key() {
        let cases = [
            (BENCH.replace("rate = 1", "rate = -1"), "process.rate"),
            (
                BENCH.replace("beta = 1", "beta = 1\ngamma = 3"),
                "dependence.gamma",
            ),
            (
                BENCH.replace("large.mean = 10", "large.mean = ten"),
                "dependence.large.mean",
            ),
            (
                BENCH.replace("small.mean = 1", "small.mean = 0"),
                "dependence.small.mean",
            ),
            (BENCH.replace("t = 0.5, 1, 2", "t = 0"), "computation.t"),
            (
                format!("{BENCH}quadrature.nodes = 2\n"),
                "computation.quadrature.nodes",
            ),
            (format!("{BENCH}[extra]\n"), "extra"),
            (
                BENCH.replace("kind = exponential_mixture", "kind = copula"),
                "dependence.kind",
            ),
        ];
        for (text, key) in cases {
            let err = RunConfig::from_str_checked(&text).unwrap_err();
            assert_eq!(err.key, key, "{err}");
        }
    }
}
