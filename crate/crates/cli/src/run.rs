//! Subcommand dispatch: engines, cross-validation and asymptotic comparisons.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use osclaims::closed::{
    mean_closed, mean_rate_limit, second_moment_closed, second_rate_limits, variance_linear_limit,
    variance_quadratic_limit,
};
use osclaims::quadrature::{
    mean_theorem1, mean_theorem3, mean_theorem4, second_theorem2, second_theorem5, second_theorem6,
};
use osclaims::simulate::estimate_moments;
use osclaims::{DependenceModel, Evaluation, SeverityLaw, SimulationPlan, StructureDistribution};

use crate::config::{ConfigError, EngineChoice, Format, RunConfig};
use crate::report::{Report, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mean,
    SecondMoment,
    Variance,
    Simulate,
    Validate,
    Asymptote,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::SecondMoment => "second-moment",
            Self::Variance => "variance",
            Self::Simulate => "simulate",
            Self::Validate => "validate",
            Self::Asymptote => "asymptote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quantity {
    Mean,
    SecondMoment,
    Variance,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Self::Mean, Self::SecondMoment, Self::Variance];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::SecondMoment => "second_moment",
            Self::Variance => "variance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Closed,
    /// Series over arrival-time order statistics (any OS process).
    Arrival,
    /// Series over the unit simplex (mixed Poisson).
    Simplex,
    /// Series over inter-claim times (mixed Poisson, gap-only claims).
    Gap,
    Simulate,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Self::Closed => "closed",
            Self::Arrival => "quadrature-arrival",
            Self::Simplex => "quadrature-simplex",
            Self::Gap => "quadrature-gap",
            Self::Simulate => "simulate",
        }
    }

    pub fn is_deterministic(self) -> bool {
        self != Self::Simulate
    }

    pub fn available(self, cfg: &RunConfig) -> bool {
        let mixed = cfg.process.structure().is_some();
        match self {
            Self::Closed => {
                mixed
                    && matches!(
                        cfg.dependence,
                        DependenceModel::ExponentialMixture { .. }
                            | DependenceModel::Independent(_)
                    )
            }
            Self::Arrival | Self::Simulate => true,
            Self::Simplex => mixed,
            Self::Gap => mixed && cfg.dependence.is_gap_only(),
        }
    }
}

/// Quadrature engine used when the user asks for "quadrature".
pub fn quadrature_route(cfg: &RunConfig) -> Engine {
    [Engine::Gap, Engine::Simplex]
        .into_iter()
        .find(|e| e.available(cfg))
        .unwrap_or(Engine::Arrival)
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Engine {
        engine: String,
        t: f64,
        error: osclaims::Error,
    },
    /// A validation run whose report was written but has failing checks.
    Validation {
        summary: String,
        failures: Vec<String>,
    },
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        use osclaims::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Engine { error, .. } => match error {
                E::NumericFailure { .. }
                | E::NonConvergence { .. }
                | E::EstimationDegenerate(_) => 3,
                E::InvalidParameter { .. }
                | E::Precondition(_)
                | E::InfiniteMoment(_)
                | E::DegenerateProcess(_) => 2,
            },
            Self::Validation { .. } => 4,
            Self::Io(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Engine { engine, t, error } => write!(f, "engine `{engine}` at t = {t}: {error}"),
            Self::Validation { failures, .. } => {
                write!(f, "validation failed: {}", failures.join("; "))
            }
            Self::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub engine: Option<EngineChoice>,
    pub format: Option<Format>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(engine) = self.engine {
            cfg.engine = engine;
        }
        if let Some(format) = self.format {
            cfg.output.format = format;
        }
        if let Some(path) = &self.output {
            cfg.output.path = Some(path.clone());
        }
    }
}

/// Outcome of a completed run.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub path: PathBuf,
    pub summary: String,
}

/// Loads the config, runs `command`, writes the report and returns it.
///
/// A failed validation still writes its report before returning
/// [`Failure::Validation`].
pub fn run(
    command: Command,
    config: &std::path::Path,
    overrides: &Overrides,
) -> Result<Outcome, Failure> {
    let text = std::fs::read_to_string(config).map_err(|e| {
        ConfigError::new("--config", format!("cannot read {}: {e}", config.display()))
    })?;
    let mut cfg = RunConfig::from_str_checked(&text)?;
    overrides.apply(&mut cfg);

    let report = execute(command, &cfg)?;
    let path = cfg
        .output
        .path
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("report.{}", cfg.output.format.extension())));
    report
        .write(&path, cfg.output.format, cfg.output.precision)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;

    let summary = summarize(&report, &path);
    if command == Command::Validate && !report.passed() {
        let failures = report
            .checks()
            .filter(|r| r.pass == Some(false))
            .map(|r| {
                format!(
                    "{} {} = {:.3e} exceeds {:.3e} at t = {}",
                    r.engine,
                    r.quantity,
                    r.value,
                    r.tolerance.unwrap_or(f64::NAN),
                    r.t
                )
            })
            .collect();
        return Err(Failure::Validation { summary, failures });
    }
    Ok(Outcome {
        report,
        path,
        summary,
    })
}

/// Runs `command` against an already validated config.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report, Failure> {
    let mut report = Report::new(command.name());
    match command {
        Command::Mean | Command::SecondMoment | Command::Variance => {
            let q = match command {
                Command::Mean => Quantity::Mean,
                Command::SecondMoment => Quantity::SecondMoment,
                _ => Quantity::Variance,
            };
            let engines = selected_engines(cfg)?;
            for &t in &cfg.grid {
                for &e in &engines {
                    let vals = evaluate(e, t, cfg, &[q])?;
                    report.rows.push(vals[&q].row(t, e, q));
                }
            }
        }
        Command::Simulate => {
            for &t in &cfg.grid {
                let vals = evaluate(Engine::Simulate, t, cfg, &Quantity::ALL)?;
                for q in Quantity::ALL {
                    report.rows.push(vals[&q].row(t, Engine::Simulate, q));
                }
            }
        }
        Command::Validate => validate(cfg, &mut report)?,
        Command::Asymptote => {
            require(Engine::Closed, cfg)?;
            asymptote_rows(cfg, &cfg.grid, &mut report)?;
        }
    }
    Ok(report)
}

fn require(engine: Engine, cfg: &RunConfig) -> Result<(), Failure> {
    if engine.available(cfg) {
        return Ok(());
    }
    Err(Failure::Engine {
        engine: engine.name().into(),
        t: cfg.grid[0],
        error: osclaims::Error::Precondition(
            "the configured process and dependence model are outside this engine's scope".into(),
        ),
    })
}

fn selected_engines(cfg: &RunConfig) -> Result<Vec<Engine>, Failure> {
    Ok(match cfg.engine {
        EngineChoice::Closed => {
            require(Engine::Closed, cfg)?;
            vec![Engine::Closed]
        }
        EngineChoice::Quadrature => vec![quadrature_route(cfg)],
        EngineChoice::Simulate => vec![Engine::Simulate],
        EngineChoice::All => {
            let mut v = Vec::new();
            if Engine::Closed.available(cfg) {
                v.push(Engine::Closed);
            }
            v.push(quadrature_route(cfg));
            v.push(Engine::Simulate);
            v
        }
    })
}

/// One engine's value for one quantity at one horizon.
#[derive(Debug, Clone, Copy)]
struct Value {
    value: f64,
    stderr: Option<f64>,
    residual: Option<f64>,
    seed: Option<u64>,
    replicates: Option<u64>,
}

impl Value {
    fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: None,
            residual: None,
            seed: None,
            replicates: None,
        }
    }

    fn quadrature(e: Evaluation) -> Self {
        Self {
            residual: Some(e.residual_bound),
            stderr: e.qmc_stderr,
            ..Self::exact(e.value)
        }
    }

    fn row(&self, t: f64, engine: Engine, q: Quantity) -> Row {
        Row {
            stderr: self.stderr,
            residual_bound: self.residual,
            seed: self.seed,
            replicates: self.replicates,
            ..Row::new(t, engine.name(), q.name(), self.value)
        }
    }
}

fn evaluate(
    engine: Engine,
    t: f64,
    cfg: &RunConfig,
    quantities: &[Quantity],
) -> Result<BTreeMap<Quantity, Value>, Failure> {
    let fail = |error| Failure::Engine {
        engine: engine.name().into(),
        t,
        error,
    };
    let mut out = BTreeMap::new();
    if engine == Engine::Simulate {
        let plan = SimulationPlan::new(
            cfg.process.clone(),
            cfg.dependence.clone(),
            t,
            cfg.replicates,
            cfg.seed,
        )
        .map_err(fail)?;
        let est = estimate_moments(&plan).map_err(fail)?;
        for (q, m) in [
            (Quantity::Mean, est.mean),
            (Quantity::SecondMoment, est.second_moment),
            (Quantity::Variance, est.variance),
        ] {
            if quantities.contains(&q) {
                out.insert(
                    q,
                    Value {
                        stderr: Some(m.stderr),
                        seed: Some(m.seed),
                        replicates: Some(m.replicates as u64),
                        ..Value::exact(m.value)
                    },
                );
            }
        }
        return Ok(out);
    }

    let needs_mean = quantities
        .iter()
        .any(|q| matches!(q, Quantity::Mean | Quantity::Variance));
    let needs_second = quantities
        .iter()
        .any(|q| matches!(q, Quantity::SecondMoment | Quantity::Variance));
    let mean = if needs_mean {
        Some(deterministic(engine, t, cfg, Quantity::Mean).map_err(fail)?)
    } else {
        None
    };
    let second = if needs_second {
        Some(deterministic(engine, t, cfg, Quantity::SecondMoment).map_err(fail)?)
    } else {
        None
    };
    for &q in quantities {
        let v = match q {
            Quantity::Mean => mean.unwrap(),
            Quantity::SecondMoment => second.unwrap(),
            Quantity::Variance => {
                let (m, s) = (mean.unwrap(), second.unwrap());
                let residual = match (m.residual, s.residual) {
                    (None, None) => None,
                    (a, b) => Some(b.unwrap_or(0.0) + 2.0 * m.value.abs() * a.unwrap_or(0.0)),
                };
                let stderr = match (m.stderr, s.stderr) {
                    (None, None) => None,
                    (a, b) => Some(b.unwrap_or(0.0) + 2.0 * m.value.abs() * a.unwrap_or(0.0)),
                };
                Value {
                    residual,
                    stderr,
                    ..Value::exact(s.value - m.value * m.value)
                }
            }
        };
        out.insert(q, v);
    }
    Ok(out)
}

fn deterministic(engine: Engine, t: f64, cfg: &RunConfig, q: Quantity) -> osclaims::Result<Value> {
    let (process, dep, qc) = (&cfg.process, &cfg.dependence, &cfg.quadrature);
    let structure = || {
        process.structure().ok_or_else(|| {
            osclaims::Error::Precondition("engine needs a mixed Poisson process".into())
        })
    };
    let second = q == Quantity::SecondMoment;
    Ok(match engine {
        Engine::Closed => {
            let l = structure()?;
            Value::exact(if second {
                second_moment_closed(t, &l, dep)?
            } else {
                mean_closed(t, &l, dep)?
            })
        }
        Engine::Arrival => Value::quadrature(if second {
            second_theorem2(t, process, dep, qc)?
        } else {
            mean_theorem1(t, process, dep, qc)?
        }),
        Engine::Simplex => {
            let l = structure()?;
            Value::quadrature(if second {
                second_theorem5(t, &l, dep, qc)?
            } else {
                mean_theorem3(t, &l, dep, qc)?
            })
        }
        Engine::Gap => {
            let l = structure()?;
            Value::quadrature(if second {
                second_theorem6(t, &l, dep, qc)?
            } else {
                mean_theorem4(t, &l, dep, qc)?
            })
        }
        Engine::Simulate => unreachable!("simulation is not deterministic"),
    })
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn validate(cfg: &RunConfig, report: &mut Report) -> Result<(), Failure> {
    let engines: Vec<Engine> = [
        Engine::Closed,
        Engine::Arrival,
        Engine::Simplex,
        Engine::Gap,
        Engine::Simulate,
    ]
    .into_iter()
    .filter(|e| e.available(cfg))
    .collect();

    for &t in &cfg.grid {
        let mut values = Vec::new();
        for &e in &engines {
            let vals = evaluate(e, t, cfg, &Quantity::ALL)?;
            for q in Quantity::ALL {
                report.rows.push(vals[&q].row(t, e, q));
            }
            values.push((e, vals));
        }
        for q in Quantity::ALL {
            for (i, (a, va)) in values.iter().enumerate() {
                for (b, vb) in &values[i + 1..] {
                    let (x, y) = (va[&q], vb[&q]);
                    let pair = format!("{} vs {}", a.name(), b.name());
                    let mut row = if b.is_deterministic() {
                        let d = relative_difference(x.value, y.value);
                        let mut r = Row::new(t, pair, format!("{}_rel_diff", q.name()), d);
                        r.tolerance = Some(cfg.validate.rel_tol);
                        r.pass = Some(d <= cfg.validate.rel_tol);
                        r
                    } else {
                        let se = y.stderr.unwrap_or(0.0);
                        let z = if se > 0.0 {
                            (x.value - y.value) / se
                        } else if x.value == y.value {
                            0.0
                        } else {
                            f64::INFINITY
                        };
                        let mut r = Row::new(t, pair, format!("{}_z_score", q.name()), z);
                        r.tolerance = Some(cfg.validate.z_max);
                        r.pass = Some(z.abs() <= cfg.validate.z_max);
                        r
                    };
                    row.seed = y.seed;
                    row.replicates = y.replicates;
                    report.rows.push(row);
                }
            }
        }
    }

    if Engine::Closed.available(cfg) {
        let t_max = cfg.grid.iter().copied().fold(f64::MIN, f64::max);
        asymptote_rows(cfg, &[t_max], report)?;
    }
    Ok(())
}

/// The single claim law when every claim has the same distribution.
fn single_severity(dep: &DependenceModel) -> Option<&SeverityLaw> {
    match dep {
        DependenceModel::Independent(law) => Some(law),
        DependenceModel::ExponentialMixture { beta, small, .. } if *beta == 0.0 => Some(small),
        DependenceModel::ExponentialMixture { large, small, .. } if large == small => Some(small),
        _ => None,
    }
}

/// Growth ratios of the closed-form moments on `grid`, and their limits at the
/// largest horizon.
fn asymptote_rows(cfg: &RunConfig, grid: &[f64], report: &mut Report) -> Result<(), Failure> {
    let l: StructureDistribution = cfg.process.structure().expect("closed engine available");
    let dep = &cfg.dependence;
    for &t in grid {
        let vals = evaluate(Engine::Closed, t, cfg, &Quantity::ALL)?;
        let (m, s, v) = (
            vals[&Quantity::Mean].value,
            vals[&Quantity::SecondMoment].value,
            vals[&Quantity::Variance].value,
        );
        for (name, x) in [
            ("mean_over_t", m / t),
            ("second_moment_over_t2", s / (t * t)),
            ("variance_over_t", v / t),
            ("variance_over_t2", v / (t * t)),
        ] {
            report
                .rows
                .push(Row::new(t, Engine::Closed.name(), name, x));
        }
    }

    let t_max = grid.iter().copied().fold(f64::MIN, f64::max);
    let fail = |error| Failure::Engine {
        engine: "limit".into(),
        t: t_max,
        error,
    };
    let mut limits = vec![("mean_rate_limit", mean_rate_limit(&l, dep).map_err(fail)?)];
    if l.moment(2).is_ok() {
        let (_, quadratic) = second_rate_limits(&l, dep).map_err(fail)?;
        limits.push(("second_moment_quadratic_limit", quadratic));
    }
    if let Some(law) = single_severity(dep) {
        if l.is_degenerate() {
            limits.push((
                "variance_linear_limit",
                variance_linear_limit(&l, law).map_err(fail)?,
            ));
        }
        if l.moment(2).is_ok() {
            limits.push((
                "variance_quadratic_limit",
                variance_quadratic_limit(&l, law).map_err(fail)?,
            ));
        }
    }
    for (name, x) in limits {
        report.rows.push(Row::new(t_max, "limit", name, x));
    }
    Ok(())
}

/// One-line description of a finished run.
pub fn summarize(report: &Report, path: &std::path::Path) -> String {
    if report.command == "validate" {
        let total = report.checks().count();
        let passed = report.checks().filter(|r| r.pass == Some(true)).count();
        let verdict = if passed == total { "PASS" } else { "FAIL" };
        return format!(
            "validate: {verdict} ({passed}/{total} checks) -> {}",
            path.display()
        );
    }
    let t_max = report.rows.iter().map(|r| r.t).fold(f64::MIN, f64::max);
    let last: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.t == t_max && r.engine != "limit")
        .map(|r| format!("{} {}={:.6}", r.engine, r.quantity, r.value))
        .collect();
    format!(
        "{}: {} rows -> {}; t={t_max}: {}",
        report.command,
        report.rows.len(),
        path.display(),
        last.join(", ")
    )
}
