use negtype_cli::{run, Outcome, EXIT_FAILS, EXIT_INPUT, EXIT_OK, EXIT_SOLVER};
use serde_json::Value;
use std::fs;

fn cli(args: &[&str]) -> Outcome {
    run(std::iter::once("negtype").chain(args.iter().copied()))
}

fn json_of(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", out.stdout))
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing number {key} in {v}"))
}

#[test]
fn check_k22_at_p2_with_room_is_strict() {
    let out = cli(&["check", "--family", "bipartite", "--m", "2", "--n", "2", "--p", "2", "--C", "1.5"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = json_of(&out);
    assert_eq!(v["status"], "strict");
    assert_eq!(v["rationale"], "C_above_c2");
    assert!((num(&v, "c2") - 2f64.sqrt()).abs() < 1e-4 * 2f64.sqrt());
}

#[test]
fn check_below_distortion_fails_with_exit_one() {
    let out = cli(&["check", "--family", "hamming", "--n", "3", "--p", "2", "--C", "1.2"]);
    assert_eq!(out.code, EXIT_FAILS);
    assert_eq!(json_of(&out)["status"], "fails");
}

#[test]
fn check_below_supremal_type_is_strict() {
    let out = cli(&["check", "--family", "bipartite", "--m", "2", "--n", "3", "--p", "0.5", "--C", "1"]);
    assert_eq!(out.code, EXIT_OK);
    let v = json_of(&out);
    assert_eq!(v["status"], "strict");
    assert_eq!(v["rationale"], "p_below_supremal");
}

#[test]
fn distortion_of_h3_at_p2() {
    let out = cli(&["distortion", "--family", "hamming", "--n", "3", "--p", "2"]);
    assert_eq!(out.code, EXIT_OK);
    let v = json_of(&out);
    let c2 = num(&v, "c2");
    assert!((c2 - 3f64.sqrt()).abs() <= 1e-4 * 3f64.sqrt(), "{c2}");
    let b = v["bracket"].as_array().unwrap();
    assert!(b[0].as_f64().unwrap() <= 3f64.sqrt() * (1.0 + 1e-9));
    assert!(b[1].as_f64().unwrap() >= 3f64.sqrt() * (1.0 - 1e-9));
}

#[test]
fn dykstra_method_agrees() {
    let out = cli(&["distortion", "--family", "bipartite", "--m", "2", "--n", "2", "--p", "2", "--method", "dykstra"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = json_of(&out);
    assert_eq!(v["method"], "dykstra");
    assert!((num(&v, "c2") - 2f64.sqrt()).abs() <= 1e-4 * 2f64.sqrt());
}

#[test]
fn supremal_of_two_points_reaches_cap() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.csv");
    fs::write(&path, "a,b\n0,1\n1,0\n").unwrap();
    let out = cli(&["supremal", "--input", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(json_of(&out)["supremal_p"], "at-least-cap");
}

#[test]
fn supremal_of_k23() {
    let out = cli(&["supremal", "--family", "bipartite", "--m", "2", "--n", "3"]);
    let v = json_of(&out);
    let exact = negtype::family_supremal(negtype::Family::Bipartite { m: 2, n: 3 }).unwrap().unwrap();
    assert!((num(&v, "supremal_p") - exact).abs() <= 1e-3);
}

#[test]
fn json_matrix_input_and_graph_input() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("k3.json");
    fs::write(&json, r#"{"labels": ["x", "y", "z"], "dist": [[0,1,1],[1,0,1],[1,1,0]]}"#).unwrap();
    let out = cli(&["distortion", "--input", json.to_str().unwrap(), "--p", "2"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = json_of(&out);
    assert!((num(&v, "c2") - 1.0).abs() < 1e-4);
    assert_eq!(v["labels"], serde_json::json!(["x", "y", "z"]));

    let graph = dir.path().join("path.txt");
    fs::write(&graph, "n 4\n0 1\n1 2\n2 3\n").unwrap();
    let out = cli(&["distortion", "--graph", graph.to_str().unwrap(), "--p", "1"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!((num(&json_of(&out), "c2") - 1.0).abs() < 1e-4);
}

#[test]
fn certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = cli(&[
        "distortion", "--family", "bipartite", "--m", "2", "--n", "3", "--p", "2", "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.is_empty());
    let saved: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let reported = num(&saved["certificate"], "ratio");

    let out = cli(&[
        "certify", "--family", "bipartite", "--m", "2", "--n", "3", "--p", "2", "--cert", report.to_str().unwrap(), "--C",
        "1.6",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = json_of(&out);
    assert_eq!(v["valid"], true);
    assert!((num(&v, "ratio") - reported).abs() <= 1e-9 * reported, "{} vs {reported}", num(&v, "ratio"));
    assert!(num(&v, "slack") <= 0.0);
    assert_eq!(v["inequality_holds"], true);
}

#[test]
fn certify_reports_violation_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("q.json");
    // xi = (1/2, 1/2, -1/2, -1/2) on K_{2,2}: ratio 2^p / 2 = 2 at p = 2.
    let xi = [0.5, 0.5, -0.5, -0.5];
    let rows: Vec<Vec<f64>> = xi.iter().map(|a| xi.iter().map(|b| a * b).collect()).collect();
    fs::write(&cert, serde_json::json!({ "Q": rows }).to_string()).unwrap();
    let args = ["certify", "--family", "bipartite", "--m", "2", "--n", "2", "--p", "2", "--cert", cert.to_str().unwrap()];
    let out = cli(&[&args[..], &["--C", "1.2"]].concat());
    assert_eq!(out.code, EXIT_FAILS);
    let v = json_of(&out);
    assert!((num(&v, "ratio") - 2.0).abs() < 1e-12);
    assert_eq!(v["inequality_holds"], false);
    let out = cli(&[&args[..], &["--C", "1.5"]].concat());
    assert_eq!(out.code, EXIT_OK);
}

#[test]
fn certify_rejects_non_psd() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("bad.json");
    fs::write(&cert, "[[1,0,0],[0,-1,0],[0,0,0]]").unwrap();
    let out = cli(&["certify", "--family", "complete", "--n", "3", "--p", "1", "--cert", cert.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_INPUT, "{}", out.stdout);
    assert!(!out.stderr.is_empty());
}

#[test]
fn gap_and_embed_outputs() {
    let out = cli(&["gap", "--family", "bipartite", "--m", "2", "--n", "2", "--p", "2", "--C", "1.5", "--restarts", "8"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = json_of(&out);
    // C is above c2 = sqrt(2), so the gap is positive.
    assert!(num(&v, "value") > 0.0);

    let out = cli(&["embed", "--family", "hamming", "--n", "2", "--p", "2", "--format", "table"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let grid: Vec<&str> = out.stdout.lines().skip_while(|l| !l.starts_with("label")).collect();
    assert_eq!(grid.len(), 5, "{}", out.stdout);
    assert!(grid[1..].iter().zip(["00", "01", "10", "11"]).all(|(l, lab)| l.starts_with(lab)));
}

#[test]
fn sweep_table_and_json() {
    let args = ["sweep", "--family", "bipartite", "--m", "2", "--n", "2", "--p", "0.5,2", "--C", "1,1.5"];
    let out = cli(&args);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with('p'));
    let out = cli(&[&args[..], &["--format", "json"]].concat());
    let v = json_of(&out);
    let rows = v["rows"].as_array().unwrap();
    let statuses: Vec<&str> = rows.iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["strict", "strict", "fails", "strict"]);
}

#[test]
fn floats_carry_at_most_twelve_significant_digits() {
    fn walk(v: &Value, bad: &mut Vec<f64>) {
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = n.as_f64().unwrap();
                if negtype_cli::round_sig(x) != x {
                    bad.push(x);
                }
            }
            Value::Array(a) => a.iter().for_each(|x| walk(x, bad)),
            Value::Object(o) => o.values().for_each(|x| walk(x, bad)),
            _ => {}
        }
    }
    let out = cli(&["distortion", "--family", "hamming", "--n", "3", "--p", "3"]);
    let mut bad = vec![];
    walk(&json_of(&out), &mut bad);
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn input_errors_exit_two() {
    let cases: [&[&str]; 5] = [
        &["distortion", "--family", "bipartite", "--m", "1", "--n", "1", "--p", "2"],
        &["distortion", "--input", "/nonexistent/matrix.csv", "--p", "2"],
        &["check", "--family", "hamming", "--n", "2", "--p", "2", "--C", "0.5"],
        &["frobnicate"],
        &["distortion", "--family", "hamming", "--n", "2"],
    ];
    for args in cases {
        let out = cli(args);
        assert_eq!(out.code, EXIT_INPUT, "{args:?}: {}", out.stdout);
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn malformed_matrix_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("asym.csv");
    fs::write(&path, "0,1,2\n1,0,1\n3,1,0\n").unwrap();
    let out = cli(&["distortion", "--input", path.to_str().unwrap(), "--p", "1"]);
    assert_eq!(out.code, EXIT_INPUT);
}

#[test]
fn unreachable_tolerance_is_a_solver_failure() {
    let out = cli(&["distortion", "--family", "hamming", "--n", "3", "--p", "2", "--tol", "1e-15"]);
    assert_eq!(out.code, EXIT_SOLVER, "{}", out.stdout);
}

#[test]
fn help_exits_zero() {
    let out = cli(&["--help"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("distortion"));
}
