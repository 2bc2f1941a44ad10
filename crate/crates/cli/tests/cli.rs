use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use osclaims_cli::Report;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn osclaims(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osclaims"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--output")
        .arg(out)
        .output()
        .unwrap()
}

fn json_report(args: &[&str], cfg: &Path) -> (Output, Option<Report>) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = osclaims(&all, cfg, &out);
    let rep = std::fs::read_to_string(&out)
        .ok()
        .map(|t| Report::from_json(&t).unwrap());
    (o, rep)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("model.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn benchmark_mean_is_8_791() {
    let (o, rep) = json_report(&["mean", "--engine", "closed"], &config("bench.cfg"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = rep.unwrap();
    let at2 = rep.rows.iter().find(|r| r.t == 2.0).unwrap();
    // ∫₀² (5.5 − 4.5e^{−2s}) ds
    assert!((at2.value - (8.75 + 2.25 * (-4.0f64).exp())).abs() < 1e-12);
    let summary = String::from_utf8_lossy(&o.stdout);
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.contains("8.791210"), "{summary}");
}

#[test]
fn variance_has_three_rows_per_engine() {
    let (o, rep) = json_report(&["variance"], &config("bench.cfg"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = rep.unwrap();
    for engine in ["closed", "quadrature-gap", "simulate"] {
        assert_eq!(rep.rows.iter().filter(|r| r.engine == engine).count(), 3);
    }
    assert_eq!(rep.rows.len(), 9);
}

#[test]
fn simulate_rows_carry_provenance() {
    let (o, rep) = json_report(&["simulate", "--seed", "99"], &config("bench.cfg"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for r in rep.unwrap().rows {
        assert_eq!(r.seed, Some(99));
        assert_eq!(r.replicates, Some(200_000));
        assert!(r.stderr.unwrap() > 0.0);
    }
}

#[test]
fn validate_compound_poisson_is_exact() {
    let (o, rep) = json_report(&["validate"], &config("degenerate-beta0.cfg"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let rep = rep.unwrap();
    let diffs: Vec<_> = rep
        .rows
        .iter()
        .filter(|r| r.quantity.ends_with("_rel_diff"))
        .collect();
    // 4 deterministic engines → 6 pairs, 3 quantities, 3 horizons.
    assert_eq!(diffs.len(), 54);
    assert!(diffs.iter().all(|r| r.value < 1e-10), "{diffs:?}");
}

#[test]
fn shipped_configs_validate() {
    for name in ["bench.cfg", "gamma.cfg", "nhpp.cfg"] {
        let (o, rep) = json_report(&["validate"], &config(name));
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(rep.unwrap().passed());
    }
}

#[test]
fn asymptote_reports_quadratic_limit() {
    let (o, rep) = json_report(&["asymptote"], &config("two-atom.cfg"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = rep.unwrap();
    let t_max = 200.0;
    let limit = rep
        .rows
        .iter()
        .find(|r| r.quantity == "variance_quadratic_limit")
        .unwrap();
    // Atoms 1 and 4 with equal weight, Exp(1) claims: (E[Y])² Var[Λ] = 2.25.
    assert_eq!(limit.t, t_max);
    assert!((limit.value - 2.25).abs() < 1e-12);
    let ratio = rep
        .rows
        .iter()
        .find(|r| r.t == t_max && r.quantity == "variance_over_t2")
        .unwrap();
    assert!((ratio.value / 2.25 - 1.0).abs() < 0.02);
}

#[test]
fn csv_is_the_default_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = osclaims(
        &["mean", "--engine", "quadrature"],
        &config("bench.cfg"),
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("t,engine,quantity,value,stderr,residual_bound,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.contains(",quadrature-gap,mean,")));
}

#[test]
fn default_output_lands_in_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_osclaims"))
        .args(["mean", "--engine", "closed", "--format", "json", "--config"])
        .arg(config("bench.cfg"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(config("bench.cfg")).unwrap();
    let cases = [
        (base.replace("beta = 1", "beta = -1"), "dependence.beta"),
        (
            base.replace("large.mean = 10", "large.mean = 0"),
            "dependence.large.mean",
        ),
        (
            base.replace("rate = 1", "rate = 1\nrates = 2"),
            "process.rates",
        ),
        (
            base.replace(
                "simulation.replicates = 200000",
                "simulation.replicates = 10",
            ),
            "computation.simulation.replicates",
        ),
    ];
    for (text, key) in cases {
        let cfg = write_config(dir.path(), &text);
        let out = dir.path().join("r.csv");
        let o = osclaims(&["mean"], &cfg, &out);
        assert_eq!(o.status.code(), Some(2), "{key}");
        assert!(stderr(&o).contains(&format!("`{key}`")), "{}", stderr(&o));
        assert!(!out.exists(), "no engine may run on a rejected config");
    }
    let o = osclaims(
        &["mean"],
        &dir.path().join("missing.cfg"),
        &dir.path().join("r.csv"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn engine_outside_scope_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = osclaims(
        &["mean", "--engine", "closed"],
        &config("nhpp.cfg"),
        &dir.path().join("r.csv"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`closed`"));
}

#[test]
fn series_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = osclaims(
        &["mean", "--engine", "quadrature"],
        &config("two-atom.cfg"),
        &dir.path().join("r.csv"),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("quadrature-gap"));
}

#[test]
fn failed_gate_exits_4_and_names_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        std::fs::read_to_string(config("bench.cfg")).unwrap() + "\n[validate]\nrel_tol = 1e-300\n";
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("r.json");
    let o = osclaims(&["validate", "--format", "json"], &cfg, &out);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains(" vs "), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let rep = Report::from_json(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(!rep.passed());
}

#[test]
fn unwritable_output_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let o = osclaims(
        &["mean", "--engine", "closed"],
        &config("bench.cfg"),
        &dir.path().join("no/such/dir/r.csv"),
    );
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_osclaims"))
        .args(["mean", "--config"])
        .arg(config("bench.cfg"))
        .env("OSCLAIMS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("OSCLAIMS_THREADS"));
}
