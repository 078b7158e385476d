use std::io::Write;
use std::process::{Command, Output, Stdio};

use flowtab::io::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

const WORKED_BM: &str = r#"{"rows":[2,2],"cols":[2,2],"terms":[
    {"rows":[3,1],"cols":[3,1],"alpha":0.5},
    {"rows":[1,3],"cols":[1,3],"alpha":"1/2"}]}"#;

fn flowtab(args: &[&str], stdin: &str, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_flowtab"));
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .env_remove("FLOWTAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parses a report and checks that it serializes back to the same JSON.
fn round_trip<T: Serialize + DeserializeOwned>(line: &str) -> T {
    let parsed: T = serde_json::from_str(line).unwrap();
    let again: serde_json::Value = serde_json::to_value(&parsed).unwrap();
    let original: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(again, original, "{line}");
    parsed
}

fn error_code(o: &Output) -> String {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let v: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    v["error"]["code"].as_str().unwrap().to_owned()
}

#[test]
fn count_unit_instance() {
    let o = flowtab(&["count"], r#"{"rows":[1,1],"cols":[1,1],"weights":[["1","1"],["1","1"]]}"#, &[]);
    assert_eq!(o.status.code(), Some(0));
    let r: CountOutput = round_trip(stdout(&o).trim());
    assert_eq!(r.count, "2");
}

#[test]
fn count_matches_oracle_with_rational_weights() {
    let inst = r#"{"rows":[2,1],"cols":[1,2],"weights":[["1/2","3"],[2,"0.25"]]}"#;
    let dp: CountOutput = round_trip(stdout(&flowtab(&["count"], inst, &[])).trim());
    let brute: CountOutput = round_trip(stdout(&flowtab(&["count-oracle"], inst, &[])).trim());
    assert_eq!(dp.count, brute.count);
    assert_eq!(dp.count, "147/8");
    assert_eq!(brute.tables_visited, 2);
}

#[test]
fn enumerate_in_decreasing_order() {
    let o = flowtab(&["enumerate"], r#"{"rows":[1,1],"cols":[1,1]}"#, &[]);
    let lines: Vec<TableLine> = stdout(&o).lines().map(round_trip).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].table, vec![vec![1, 0], vec![0, 1]]);
    assert_eq!(lines[1].table, vec![vec![0, 1], vec![1, 0]]);
}

#[test]
fn kostant_examples() {
    for (args, phi) in [(&["kostant", "1", "0", "-1"][..], "2"), (&["kostant", "2", "0", "-2"], "3"), (&["kostant", "0", "0", "0"], "1")] {
        let o = flowtab(args, "", &[]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).trim(), format!(r#"{{"phi":"{phi}"}}"#));
    }
    let bad = flowtab(&["kostant", "1", "0"], "", &[]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_code(&bad), "NonZeroSum");
}

#[test]
fn verify_bm_worked_instance() {
    let o = flowtab(&["verify-bm", "--explore-23"], WORKED_BM, &[]);
    assert_eq!(o.status.code(), Some(0));
    let line: VerifyLine = round_trip(stdout(&o).trim());
    assert!(line.holds && line.main.holds);
    assert!((line.main.lhs - 2.0).abs() < 1e-9);
    assert!((line.main.rhs - 2.0 / 4.5).abs() < 1e-9);
    assert!((line.factor_bounds.factorials.factor.unwrap() - 8.0 / 3.0).abs() < 1e-12);
    assert!(line.explore.is_some());
    let plain = flowtab(&["verify-bm"], &format!("[{WORKED_BM},{WORKED_BM}]"), &[]);
    let lines: Vec<VerifyLine> = stdout(&plain).lines().map(round_trip).collect();
    assert_eq!(lines.iter().map(|l| l.index).collect::<Vec<_>>(), vec![0, 1]);
    assert!(lines[0].explore.is_none());
}

#[test]
fn verify_bm_rejects_bad_combination() {
    let bad = WORKED_BM.replace("\"alpha\":0.5", "\"alpha\":0.25");
    let o = flowtab(&["verify-bm"], &bad, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "InvalidConvexCombination");
}

#[test]
fn scale_and_factorize() {
    let inst = r#"{"rows":[2,1],"cols":[1,2],"weights":[[1,2],[3,0.5]]}"#;
    let o = flowtab(&["scale"], inst, &[]);
    let s: ScaleOutput = round_trip(stdout(&o).trim());
    assert!(s.residual <= 1e-10);
    let o = flowtab(&["factorize"], inst, &[]);
    assert_eq!(o.status.code(), Some(0));
    let f: FactorizeOutput = round_trip(stdout(&o).trim());
    assert!(f.holds && f.identity_error < 1e-8);
    let zero = flowtab(&["scale"], r#"{"rows":[1],"cols":[1],"weights":[[0]]}"#, &[]);
    assert_eq!(zero.status.code(), Some(2));
    assert_eq!(error_code(&zero), "NonPositiveInput");
}

#[test]
fn permanent_exact_and_capped() {
    let o = flowtab(&["permanent"], r#"{"matrix":[[1,2],[3,4]]}"#, &[]);
    let p: PermanentOutput = round_trip(stdout(&o).trim());
    assert_eq!(p.permanent, 10.0);
    assert_eq!(p.exact.as_deref(), Some("10"));
    let o = flowtab(&["permanent", "--cap-permanent", "1"], "[[1,2],[3,4]]", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_code(&o), "SizeCapExceeded");
}

#[test]
fn estimate_is_deterministic_across_thread_counts() {
    let inst = r#"{"rows":[2,1],"cols":[1,2],"weights":[[1,2],[3,1]]}"#;
    let args = ["estimate", "--samples", "5000", "--seed", "42"];
    let a = flowtab(&args, inst, &[]);
    let b = flowtab(&args, inst, &[("FLOWTAB_THREADS", "1")]);
    let c = flowtab(&args, inst, &[("FLOWTAB_THREADS", "3")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let e: EstimateOutput = round_trip(stdout(&a).trim());
    assert_eq!(e.samples, 5000);
    assert!((e.mean - 14.0).abs() < 5.0 * e.stderr);
    let bad = flowtab(&args, inst, &[("FLOWTAB_THREADS", "zero")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn flow_commands() {
    let net = r#"{"n":3,"edges":[[1,0],[2,0],[2,1]],"excess":[1,0,-1]}"#;
    let o = flowtab(&["flow-count", "--oracle"], net, &[]);
    assert_eq!(o.status.code(), Some(0));
    let f: FlowCountOutput = round_trip(stdout(&o).trim());
    assert_eq!((f.count.as_str(), f.oracle.as_deref()), ("2", Some("2")));

    let capped = r#"{"n":2,"edges":[[0,1]],"excess":[-2,2],"capacities":[1]}"#;
    let f: FlowCountOutput = round_trip(stdout(&flowtab(&["flow-count", "--oracle"], capped, &[])).trim());
    assert_eq!((f.count.as_str(), f.oracle.as_deref()), ("0", Some("0")));

    let o = flowtab(&["reduce"], net, &[]);
    let r: ReduceOutput = round_trip(stdout(&o).trim());
    // the reduced instance counts the same through `count`
    let inst = serde_json::to_string(&r.instance.unwrap()).unwrap();
    let c: CountOutput = round_trip(stdout(&flowtab(&["count"], &inst, &[])).trim());
    assert_eq!(c.count, "2");

    let cyclic = flowtab(&["flow-count"], r#"{"n":2,"edges":[[0,1],[1,0]],"excess":[0,0]}"#, &[]);
    assert_eq!(cyclic.status.code(), Some(2));
    assert_eq!(error_code(&cyclic), "CyclicGraph");
}

#[test]
fn input_errors_are_structured() {
    let o = flowtab(&["count"], "not json", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "InvalidJson");
    let o = flowtab(&["count"], r#"{"rows":[2,1],"cols":[1,1]}"#, &[]);
    assert_eq!(error_code(&o), "MismatchedTotals");
    let o = flowtab(&["count"], r#"{"rows":[1,0],"cols":[1]}"#, &[]);
    assert_eq!(error_code(&o), "NonPositiveMargin");
    let o = flowtab(&["count"], r#"{"rows":[1],"cols":[1],"weights":[["-1"]]}"#, &[]);
    assert_eq!(error_code(&o), "NegativeWeight");
    let o = flowtab(&["count", "--tolerance", "0"], "{}", &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowtab(&["frobnicate"], "", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "InvalidArguments");
}

#[test]
fn resource_limits_exit_3() {
    let big = r#"{"rows":[30,30,30],"cols":[30,30,30]}"#;
    let o = flowtab(&["count-oracle"], big, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_code(&o), "OracleLimitExceeded");
    let o = flowtab(&["count", "--memo-budget", "5"], big, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_code(&o), "ResourceLimit");
}

#[test]
fn reads_files_and_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("inst.json");
    let output = dir.path().join("out.json");
    std::fs::write(&input, r#"{"rows":[2,2,2],"cols":[2,2,2]}"#).unwrap();
    let o = flowtab(
        &["count", input.to_str().unwrap(), "--output", output.to_str().unwrap()],
        "",
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let r: CountOutput = round_trip(std::fs::read_to_string(&output).unwrap().trim());
    assert_eq!(r.count, "21");
}

#[test]
fn help_exits_zero() {
    let o = flowtab(&["--help"], "", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verify-bm"));
}
