use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use lpbound::bounds::{thm2_bound, FunctionClass};
use lpbound::planner::{self, Budget, PlanRequest};
use lpbound::report::BoundRecord;
use lpbound::validate::ValidationReport;

fn lpbound(args: &[&str]) -> Output {
    lpbound_env(args, &[])
}

fn lpbound_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lpbound"));
    cmd.args(args).env_remove("LPBOUND_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Column `name` of the single data row of a CSV document.
fn csv_field(text: &str, name: &str) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header
        .iter()
        .position(|h| *h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    row[i].to_string()
}

const OPTIMIZE_ROW: [&str; 9] = [
    "--p", "1.5", "--eps", "0.1", "--gap", "0.01", "--dratio", "1e30", "--format",
];

#[test]
fn theorem2_hand_example() {
    let out = lpbound(&[
        "bound", "--regime", "theorem2", "--n", "16", "--delta", "0.5", "--p", "2", "--gap", "1", "--norm", "1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let total: f64 = csv_field(&stdout(&out), "total").parse().unwrap();
    assert!((total - 6.0).abs() < 1e-9);
}

#[test]
fn theorem1_hand_example() {
    let out = lpbound(&[
        "bound", "--regime", "theorem1", "--n", "1", "--gap", "1", "--alpha", "0", "--p", "2", "--norm", "1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(csv_field(&stdout(&out), "total"), "8.00000e0");
}

#[test]
fn missing_delta_is_a_usage_error() {
    let out = lpbound(&["bound", "--regime", "theorem2", "--n", "16", "--p", "2", "--gap", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--delta"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&lpbound(&["frobnicate"])), 2);
    assert_eq!(code(&lpbound(&["bound", "--n", "ten"])), 2);
    assert_eq!(
        code(&lpbound(&[
            "plan", "--regime", "eq9", "--p", "1.5", "--eps", "0.1", "--gap", "0.1"
        ])),
        2
    );
    assert_eq!(code(&lpbound(&["--help"])), 0);
}

#[test]
fn domain_errors_name_the_precondition() {
    let out = lpbound(&[
        "bound", "--regime", "theorem2", "--n", "16", "--delta", "0.5", "--p", "3", "--gap", "1",
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains('p'), "{}", stderr(&out));

    let out = lpbound(&[
        "bound", "--regime", "theorem2", "--n", "16", "--delta", "0.5", "--p", "2", "--gap", "0",
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("gap"), "{}", stderr(&out));
}

#[test]
fn bound_json_matches_library() {
    let out = lpbound(&[
        "bound", "--regime", "theorem2", "--n", "12345.5", "--delta", "0.3", "--p", "1.7", "--gap", "0.02", "--norm",
        "2.5", "--format", "json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["command"], "bound");
    let record: BoundRecord = serde_json::from_value(doc["result"].clone()).unwrap();
    let f = FunctionClass::new(1.7, 2.5).unwrap();
    assert_eq!(record.bound, thm2_bound(12345.5, 0.3, 0.02, &f).unwrap());
}

#[test]
fn optimize_reproduces_table_row() {
    let mut args = vec!["optimize"];
    args.extend(OPTIMIZE_ROW);
    args.push("json");
    let out = lpbound(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let budget: Budget = serde_json::from_value(json(&out)["result"].clone()).unwrap();
    let delta = budget.delta.unwrap();
    assert!((delta / 2.31e-3 - 1.0).abs() < 0.01, "delta* = {delta}");
    assert!((budget.total / 5.99e7 - 1.0).abs() < 0.01, "N = {}", budget.total);

    let req = PlanRequest::theorem2(0.1, 0.01, 1e30, FunctionClass::new(1.5, 1.0).unwrap()).unwrap();
    assert_eq!(budget, planner::delta_star(&req).unwrap());
}

#[test]
fn plan_defaults_to_heuristic_delta() {
    let out = lpbound(&[
        "plan", "--p", "1.3", "--eps", "0.1", "--gap", "0.01", "--dratio", "1e30",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let total: f64 = csv_field(&stdout(&out), "total").parse().unwrap();
    assert!((total / 1.89e10 - 1.0).abs() < 0.01, "N = {total}");
}

#[test]
fn plan_without_initial_mismatch_has_no_burnin() {
    let out = lpbound(&[
        "plan", "--p", "1.5", "--eps", "0.1", "--gap", "0.01", "--dratio", "0", "--delta", "0.1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(csv_field(&stdout(&out), "n0"), "0.00000e0");
}

#[test]
fn optimize_rejects_fixed_delta() {
    let out = lpbound(&[
        "optimize", "--p", "1.5", "--eps", "0.1", "--gap", "0.01", "--delta", "0.1",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn tables_report_flagged_cell() {
    let out = lpbound(&["tables"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("table,p,epsilon,delta_star,"));
    let err = stderr(&out);
    assert!(err.contains("flagged:"), "{err}");
    assert!(err.contains("published") && err.contains("computed"));
}

#[test]
fn json_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["optimize"];
    args.extend(OPTIMIZE_ROW);
    args.push("json");
    let first = lpbound(&args);
    assert_eq!(code(&first), 0);
    let doc = json(&first);

    let path = dir.path().join("run.json");
    std::fs::write(&path, serde_json::to_string(&doc["config"]).unwrap()).unwrap();
    let second = lpbound(&["optimize", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&second), 0, "{}", stderr(&second));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"regime": "theorem2", "n": 16, "delta": 0.5, "p": 2, "gap": 1, "norm": 7}"#,
    )
    .unwrap();
    let out = lpbound(&["bound", "--config", path.to_str().unwrap(), "--norm", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(csv_field(&stdout(&out), "total"), "6.00000e0");
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"p": 1.5, "colour": "blue"}"#).unwrap();
    let out = lpbound(&["tables", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("colour"));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = lpbound(&["tables", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&lpbound(&["tables"])));
}

#[test]
fn simulate_is_deterministic_and_reads_seed_from_env() {
    let args = [
        "simulate",
        "--chain",
        "three-state",
        "--n",
        "50",
        "--n0",
        "3",
        "--reps",
        "2000",
    ];
    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "11"]);
    let a = lpbound(&flagged);
    let b = lpbound_env(&flagged, &[("RAYON_NUM_THREADS", "3")]);
    let c = lpbound_env(&args, &[("LPBOUND_SEED", "11")]);
    let d = lpbound_env(&flagged, &[("LPBOUND_SEED", "12")]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(a.stdout, d.stdout);
    assert_eq!(csv_field(&stdout(&a), "seed"), "11");

    let other = lpbound_env(&args, &[("LPBOUND_SEED", "12")]);
    assert_ne!(a.stdout, other.stdout);
    assert_eq!(code(&lpbound_env(&args, &[("LPBOUND_SEED", "twelve")])), 2);
}

#[test]
fn simulate_trajectory_has_requested_length() {
    let out = lpbound(&[
        "simulate",
        "--chain",
        "two-state",
        "--n",
        "20",
        "--n0",
        "5",
        "--trajectory",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,state");
    assert_eq!(lines.len(), 26);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0") || l.ends_with(",1")));
}

#[test]
fn simulate_rejects_fractional_n() {
    assert_eq!(code(&lpbound(&["simulate", "--chain", "two-state", "--n", "1.5"])), 3);
}

#[test]
fn validate_two_state_dominance_passes() {
    let out = lpbound(&[
        "validate",
        "--chain",
        "two-state",
        "--suite",
        "bound-dominance",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("check,n,n0,R,e1_hat,uncertainty,bound_total,seed,pass\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn validate_rate_report_round_trips() {
    let out = lpbound(&[
        "validate",
        "--chain",
        "iid-uniform",
        "--suite",
        "rate",
        "--gamma",
        "0.65",
        "--p",
        "1.5",
        "--reps",
        "2000",
        "--rate-grid",
        "100,1000,10000,100000",
        "--seed",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    let report: ValidationReport = serde_json::from_value(doc["result"].clone()).unwrap();
    assert!(report.passed());
    let rate = report.rate.as_ref().unwrap();
    assert!(rate.window.0 <= rate.fit.slope && rate.fit.slope <= rate.window.1);
    assert_eq!(serde_json::to_value(&report).unwrap(), doc["result"]);
}

#[test]
fn validate_failure_exits_one_and_names_check() {
    // Four nearly equal n leave the regression with nothing to fit.
    let out = lpbound(&[
        "validate",
        "--chain",
        "two-state",
        "--suite",
        "rate",
        "--reps",
        "200",
        "--rate-grid",
        "100,101,102,103",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("failed: rate"), "{}", stderr(&out));
}

#[test]
fn validate_rejects_non_stochastic_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"matrix": [[0.6, 0.5], [0.5, 0.5]]}"#).unwrap();
    let out = lpbound(&["validate", "--chain", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("rows sum to 1"), "{}", stderr(&out));
    assert!(Path::new(&path).exists());
}
