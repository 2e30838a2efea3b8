use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pickfreeze::analytic::{ToyFamily, ToyModel};
use pickfreeze::cli::EstimateReport;
use pickfreeze::gca::{gca_utilities, GcaParams, GcaReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pickfreeze"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, json: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json.to_string()).unwrap();
    path
}

fn report(dir: &Path) -> EstimateReport {
    serde_json::from_str(&fs::read_to_string(dir.join("estimates.json")).unwrap()).unwrap()
}

fn values(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_owned(), v.parse().unwrap()))
        .collect()
}

#[test]
fn oracle_exp_prints_four_values() {
    let o = run(&["oracle", "exp"]);
    assert!(o.status.success());
    let v = values(&stdout(&o));
    let names: Vec<&str> = v.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(names, ["D1", "D2", "S1", "S2"]);
    assert_eq!(v[0].1, 0.0191);
    assert_eq!(v[1].1, 0.0949);
}

#[test]
fn oracle_toy_limits_and_coupling() {
    // large alpha relative to the spread of X2 separates the two groups completely
    let o = run(&["oracle", "toy", "--family", "exponential", "--p", "0.5", "--alpha", "1", "--x2-param", "50"]);
    let v = values(&stdout(&o));
    assert!((v[0].1 - 1.0 / 12.0).abs() < 1e-3, "{v:?}");
    for family in ["gaussian", "uniform", "exponential"] {
        let o = run(&["oracle", "toy", "--family", family, "--p", "0.3", "--alpha", "2", "--q", "2", "--digits", "12"]);
        let v = values(&stdout(&o));
        let h1 = v.iter().find(|(k, _)| k == "H1_2").unwrap().1;
        let h2 = v.iter().find(|(k, _)| k == "H2_2").unwrap().1;
        assert!((h1 - h2).abs() < 1e-10, "{family}: {h1} {h2}");
    }
}

#[test]
fn oracle_curves_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["oracle", "curves", "--ps", "0.1,0.5", "--alphas", "1", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert!(text.starts_with("family,p,alpha,index,value\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 4);
}

#[test]
fn unknown_oracle_model_is_a_usage_error() {
    let o = run(&["oracle", "ishigami"]);
    assert_eq!(o.status.code(), Some(2));
}

fn exp_study(dir: &Path) -> PathBuf {
    write_config(
        dir,
        "exp.json",
        serde_json::json!({
            "model": {"builtin": {"name": "exp"}},
            "method": "cvm",
            "targets": [[1], [2]],
            "N": 1000,
            "seed": 5,
        }),
    )
}

#[test]
fn estimate_is_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = exp_study(dir.path());
    let mut outputs = Vec::new();
    for threads in ["1", "4", "1"] {
        let out = dir.path().join(format!("out{}", outputs.len()));
        let o = run(&[
            "estimate",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((
            fs::read(out.join("estimates.json")).unwrap(),
            fs::read(out.join("estimates.csv")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let r = report(&dir.path().join("out0"));
    assert_eq!(r.estimates.len(), 2);
    assert_eq!(r.estimates[0].estimate.seed, Some(5));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = exp_study(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&["estimate", "--config", cfg.to_str().unwrap(), "--out-dir", a.to_str().unwrap()]);
    run(&["estimate", "--config", cfg.to_str().unwrap(), "--seed", "6", "--out-dir", b.to_str().unwrap()]);
    assert_eq!(report(&b).estimates[0].estimate.seed, Some(6));
    assert_ne!(report(&a).estimates[0].estimate.value, report(&b).estimates[0].estimate.value);
}

#[test]
fn toy_cvm_estimates_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "toy.json",
        serde_json::json!({
            "model": {"builtin": {"name": "toy", "family": "exponential", "p": 0.3, "alpha": 1.0}},
            "method": "cvm",
            "targets": [[1], [2]],
            "N": 10000,
            "seed": 1,
        }),
    );
    let o = run(&["estimate", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let m = ToyModel::coupled(ToyFamily::Exponential, 1.0, 0.3).unwrap();
    for (e, which) in report(dir.path()).estimates.iter().zip([1, 2]) {
        let truth = m.cvm_closed(which).unwrap();
        assert!(e.estimate.covers(truth, 3.0), "D{which} {:?} vs {truth}", e.estimate);
    }
}

#[test]
fn hsobol_order_two_and_sobol_share_numerators() {
    let dir = tempfile::tempdir().unwrap();
    let mut got = Vec::new();
    for method in ["sobol", "hsobol(2)"] {
        let cfg = write_config(
            dir.path(),
            "s.json",
            serde_json::json!({
                "model": {"builtin": {"name": "toy", "family": "uniform", "p": 0.4, "alpha": 2.0}},
                "method": method,
                "targets": [[1], [2]],
                "N": 2000,
                "seed": 9,
                "ci": {"method": "none"},
            }),
        );
        let out = dir.path().join(method);
        assert!(run(&["estimate", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]).status.success());
        got.push(report(&out).estimates.iter().map(|e| e.estimate.value).collect::<Vec<_>>());
    }
    for (a, b) in got[0].iter().zip(&got[1]) {
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} {b}");
    }
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", serde_json::json!({"method": "cvm", "targets": [[1]], "N": "x"}));
    let o = run(&["estimate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`N`"));

    let degenerate = write_config(
        dir.path(),
        "zero.json",
        serde_json::json!({
            "inputs": [{"name": "a", "dist": {"kind": "uniform", "a": 0, "b": 1}}],
            "model": {"builtin": {"name": "linear", "coefficients": [0.0]}},
            "method": "sobol_ratio",
            "targets": [[1]],
            "N": 50,
        }),
    );
    let o = run(&["estimate", "--config", degenerate.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sum_model.py");
    let failing = write_config(
        dir.path(),
        "fail.json",
        serde_json::json!({
            "inputs": [{"name": "a", "dist": {"kind": "uniform", "a": 0, "b": 1}}],
            "model": {"external": {"command": ["python3", script, "fail"], "timeout_secs": 30}},
            "method": "cvm",
            "targets": [[1]],
            "N": 50,
        }),
    );
    let o = run(&["estimate", "--config", failing.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("simulator exploded"));

    let o = run(&["estimate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn design_then_ingest_matches_direct_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = serde_json::json!([
        {"name": "a", "dist": {"kind": "gaussian", "mu": 0, "sigma": 1}},
        {"name": "b", "dist": {"kind": "beta", "alpha": 2, "beta": 5}},
    ]);
    let cfg = write_config(
        dir.path(),
        "lin.json",
        serde_json::json!({
            "inputs": inputs,
            "model": {"builtin": {"name": "linear", "coefficients": [1.0, 1.0]}},
            "method": "hsobol(3)",
            "targets": [[2]],
            "N": 400,
            "seed": 4,
        }),
    );
    let c = cfg.to_str().unwrap();
    let d = dir.path().join("designs");
    let o = run(&["design", "--config", c, "--out-dir", d.to_str().unwrap()]);
    assert!(o.status.success());
    let design = d.join("design_t1.csv");
    assert_eq!(stdout(&o).trim(), design.display().to_string());
    let outputs = dir.path().join("y.csv");
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sum_model.py");
    assert!(Command::new("python3").arg(&script).arg("sum").arg(&design).arg(&outputs).status().unwrap().success());

    let ingested = dir.path().join("ingested");
    let o = run(&[
        "ingest",
        "--config",
        c,
        "--design",
        design.to_str().unwrap(),
        "--outputs",
        outputs.to_str().unwrap(),
        "--out-dir",
        ingested.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let direct = dir.path().join("direct");
    assert!(run(&["estimate", "--config", c, "--out-dir", direct.to_str().unwrap()]).status.success());
    let (a, b) = (report(&ingested), report(&direct));
    assert_eq!(a.estimates.len(), 1);
    assert_eq!(a.estimates[0].target, vec![2]);
    assert_eq!(a.estimates[0].estimate.value, b.estimates[0].estimate.value);
    assert_eq!(a.estimates[0].estimate.p, Some(3));
}

#[test]
fn gca_degenerate_reproduces_base_utilities() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gca", "--degenerate", "-N", "1000", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("best: B"));
    let r: GcaReport = serde_json::from_str(&fs::read_to_string(dir.path().join("gca_report.json")).unwrap()).unwrap();
    assert_eq!(r.means(), gca_utilities(&GcaParams::base()));
    let csv = fs::read_to_string(dir.path().join("gca_indices.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn gca_runs_are_deterministic_and_validate_n() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["gca", "-N", "2000", "--seed", "3", "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(a.join("gca_report.json")).unwrap(), fs::read(b.join("gca_report.json")).unwrap());
    let o = run(&["gca", "-N", "10"]);
    assert_eq!(o.status.code(), Some(2));
}
