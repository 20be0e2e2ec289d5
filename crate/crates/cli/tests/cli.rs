use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bilayer::scenario::ScenarioFile;
use serde_json::{json, Value};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn bilayer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilayer")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn run_into(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bilayer(&args)
}

fn plot_rows(dir: &Path) -> Vec<(f64, f64)> {
    let mut r = csv::Reader::from_path(dir.join("plot.csv")).unwrap();
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[0].parse().unwrap(), rec[1].parse().unwrap())
    }).collect()
}

#[test]
fn identity_scenario_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(&scenario("two_cluster_identity.json"), tmp.path(), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = summary(tmp.path());
    assert!(s["final_residuals"]["max"].as_f64().unwrap() < 1e-8);
    let x: Vec<f64> = serde_json::from_value(s["solution"].clone()).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 2.0).abs() < 1e-8);
    assert_eq!(s["verdicts"]["converged"], json!(true));
    let header = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(header.starts_with("time,V,conservation_residual,consensus_residual,overall_residual\n"));
}

#[test]
fn scheme_override_switches_layout() {
    let tmp = tempfile::tempdir().unwrap();
    for scheme in ["row", "column"] {
        let dir = tmp.path().join(scheme);
        let out = run_into(&scenario("three_clusters.json"), &dir, &["--scheme", scheme]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let s = summary(&dir);
        assert_eq!(s["scheme"], json!(scheme));
        assert_eq!(s["agents_per_cluster"], json!([3, 2, 2]));
        assert!(s["solution_residual"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn disconnected_agent_graph_names_the_cluster() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario("three_clusters.json")).unwrap()).unwrap();
    v["agent_graphs"][1] = json!({ "nodes": 2, "edges": [] });
    let path = write_json(tmp.path(), "bad.json", &v);
    let out = run_into(&path, &tmp.path().join("out"), &[]);
    assert_eq!(code(&out), 3);
    let err = stderr(&out);
    assert!(err.contains("agent_graphs[1]") && err.contains("cluster 1"), "{err}");
}

#[test]
fn malformed_scenario_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    fs::write(&path, r#"{ "scheme": "row", "a": [[1.0, "x"]] }"#).unwrap();
    let out = run_into(&path, &tmp.path().join("out"), &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("a[0][1]"), "{}", stderr(&out));

    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario("two_cluster_identity.json")).unwrap()).unwrap();
    v["sim"] = json!({ "max_tme": 5.0 });
    let path = write_json(tmp.path(), "typo.json", &v);
    assert_eq!(code(&run_into(&path, &tmp.path().join("out"), &[])), 2);
}

#[test]
fn missing_scenario_is_an_io_error() {
    let out = bilayer(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn oversized_step_diverges() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario("three_clusters.json")).unwrap()).unwrap();
    v["sim"]["step_size"] = json!(10.0);
    let path = write_json(tmp.path(), "big_step.json", &v);
    let out = run_into(&path, &tmp.path().join("out"), &[]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("step_size"));
}

#[test]
fn inconsistent_system_is_unconverged() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json!({
        "scheme": "row",
        "a": [[1.0], [1.0]],
        "b": [1.0, 2.0],
        "cluster_graph": { "nodes": 2, "edges": [[0, 1]] },
        "agent_graphs": [{ "nodes": 1 }, { "nodes": 1 }],
        "layout": { "row": { "cluster_rows": [1, 1], "agent_cols": [[1], [1]] } },
        "sim": { "max_time": 200.0 }
    });
    let path = write_json(tmp.path(), "inconsistent.json", &v);
    let dir = tmp.path().join("out");
    let out = run_into(&path, &dir, &[]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    // artifacts are still written for inspection
    assert!(dir.join("summary.json").is_file() && dir.join("trajectory.csv").is_file());
    assert_eq!(summary(&dir)["verdicts"]["converged"], json!(false));
}

#[test]
fn plot_shows_decreasing_log_tail() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    assert_eq!(code(&run_into(&scenario("three_clusters.json"), &dir, &[])), 0);
    let out = bilayer(&["plot", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = plot_rows(&dir);
    let tail: Vec<f64> = rows.iter().filter(|p| p.1 > 1e-14).map(|p| p.1.ln()).collect();
    let tail = &tail[tail.len() / 2..];
    assert!(tail.len() >= 5);
    assert!(tail.windows(2).all(|w| w[1] < w[0]), "{tail:?}");
}

#[test]
fn plot_of_equilibrium_start_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario("two_cluster_identity.json")).unwrap()).unwrap();
    // b = 0 makes the zero initial state the equilibrium
    v["a"] = json!([[1.0, 0.0], [0.0, 1.0]]);
    v["b"] = json!([0.0, 0.0]);
    let path = write_json(tmp.path(), "zero.json", &v);
    let dir = tmp.path().join("run");
    assert_eq!(code(&run_into(&path, &dir, &[])), 0);
    assert_eq!(code(&bilayer(&["plot", dir.to_str().unwrap()])), 0);
    assert!(plot_rows(&dir).iter().all(|p| p.1 <= 1e-12));
}

#[test]
fn plot_rejects_empty_or_missing_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = bilayer(&["plot", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing run artifact"));

    fs::write(dir.join("summary.json"), "{}").unwrap();
    fs::write(dir.join("trajectory.csv"), "time,V,conservation_residual,consensus_residual,overall_residual\n").unwrap();
    let out = bilayer(&["plot", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("no samples"));
    let names: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn shipped_scenarios_round_trip() {
    for name in ["two_cluster_identity.json", "three_clusters.json"] {
        let f = ScenarioFile::load(&scenario(name)).unwrap();
        let again = ScenarioFile::parse(&f.to_json()).unwrap();
        assert_eq!(f, again);
        for scheme in [bilayer_core::Scheme::Row, bilayer_core::Scheme::Column] {
            f.build(Some(scheme)).unwrap();
        }
    }
}

#[test]
fn verify_is_reproducible() {
    let a = bilayer(&["verify", "--trials", "3", "--max-dim", "5", "--seed", "11"]);
    let b = bilayer(&["verify", "--trials", "3", "--max-dim", "5", "--seed", "11"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).ends_with("result: PASS\n"));
}
