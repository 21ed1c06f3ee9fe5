use std::path::PathBuf;
use std::process::{Command, Output};

fn qprob(args: &[&str]) -> Output {
    qprob_env(args, &[])
}

fn qprob_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qprob"));
    cmd.args(args).env_remove("QPROB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn model(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", "models", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_prints_catalog() {
    let o = qprob(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("name,kind,description\n"));
    for name in ["chsh-tsirelson", "gksl-dephasing", "logic-distributivity"] {
        assert!(out.contains(name), "{name} missing");
    }
    let json = qprob(&["list", "--format", "json"]);
    let parsed: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(parsed.as_array().unwrap().len() >= 9);
}

#[test]
fn run_tsirelson_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = qprob(&["run", "--scenario", "chsh-tsirelson", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("chsh-tsirelson: PASS"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let bell = report["quantities"]["bell_max"].as_f64().unwrap();
    assert!((bell - 2.0 * 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn failing_scenario_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.json");
    std::fs::write(
        &path,
        r#"{"name":"strict","description":"expects the classical bound","kind":"chsh",
            "config":{"setting":"tsirelson"},
            "expected":[{"quantity":"bell_max","expected":2,"cmp":"at_most"}]}"#,
    )
    .unwrap();
    let o = qprob(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL bell_max"));
}

#[test]
fn invalid_scenario_config_exits_two_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"name":"bad","description":"d","kind":"g2","config":{"windows":-3,"mean_count":1,"seed":1}}"#,
    )
    .unwrap();
    let o = qprob(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config.windows"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let o = qprob(&["bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = qprob(&["chsh-sweep", "--trails", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--trails"));
    let o = qprob(&["run", "--scenario", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sampling_commands_require_a_seed() {
    for args in [
        vec!["chsh-sweep", "--trials", "2"],
        vec!["g2-demo", "--windows", "10"],
        vec![
            "lln-sample",
            "--state",
            &model("plus.json"),
            "--observable",
            &model("sigma-z.json"),
            "--outcome",
            "1",
        ],
    ]
    .iter()
    {
        let o = qprob(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("--seed"));
    }
}

#[test]
fn ftp_compare_plus_state() {
    let o = qprob(&[
        "ftp-compare",
        "--state",
        &model("plus.json"),
        "--a",
        &model("sigma-z.json"),
        "--b",
        &model("sigma-x.json"),
        "--target",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "target,classical_part,interference_term,total\n1,0.5,0.5,1\n");
}

#[test]
fn output_is_deterministic_across_runs_and_thread_counts() {
    let args = ["chsh-sweep", "--trials", "50", "--seed", "9", "--mode", "compatible-either"];
    let a = qprob(&args);
    let b = qprob(&args);
    let c = qprob_env(&args, &[("QPROB_THREADS", "1")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let g = ["g2-demo", "--seed", "3", "--windows", "20000", "--format", "json"];
    assert_eq!(qprob(&g).stdout, qprob_env(&g, &[("QPROB_THREADS", "2")]).stdout);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = qprob_env(&["list"], &[("QPROB_THREADS", "0")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn instrument_check_exit_codes() {
    let sz = model("sigma-z.json");
    let ok = qprob(&["instrument-check", "--model", &model("cnot-probe.json"), "--observable", &sz, "--map", "0:1,1:-1"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let swap = qprob(&["instrument-check", "--model", "swap_probe", "--observable", &sz, "--map", "0:1,1:-1"]);
    assert_eq!(swap.status.code(), Some(1));
    let bad_map = qprob(&["instrument-check", "--observable", &sz, "--map", "0:7,1:-1"]);
    assert_eq!(bad_map.status.code(), Some(2));
}

#[test]
fn gksl_commands_leave_inputs_untouched() {
    let m = model("dephasing.json");
    let before = std::fs::read(&m).unwrap();
    let run = qprob(&["gksl-run", "--model", &m, "--rho0", &model("plus.json"), "--t", "1", "--dt", "0.5"]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let lines: Vec<String> = stdout(&run).lines().map(String::from).collect();
    assert_eq!(lines[0], "t,population_0,population_1,coherence_01,distance_to_steady");
    assert_eq!(lines.len(), 4);
    let steady = qprob(&[
        "gksl-steady",
        "--model",
        &m,
        "--rho0",
        &model("plus.json"),
        "--observable",
        &model("sigma-z.json"),
    ]);
    assert_eq!(steady.status.code(), Some(0), "{}", stderr(&steady));
    let out = stdout(&steady);
    assert!(out.contains("diagonal_in_basis,true"));
    assert!(out.contains("null_dimension,2"));
    assert_eq!(std::fs::read(&m).unwrap(), before);
}

#[test]
fn logic_demo_reports_counterexample_and_growth() {
    let o = qprob(&["logic-demo", "--max-qubits", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("equal,false"));
    assert!(out.contains("rhs_rank,0"));
    assert!(out.contains("n,atom_count,wall_time_s"));
    assert!(out.lines().any(|l| l.starts_with("5,32,")));
}
