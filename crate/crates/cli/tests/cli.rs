use std::path::PathBuf;
use std::process::Command;

use ergo_cli::model::{emit, parse_model_str, ModelFile};
use proptest::prelude::*;
use serde_json::Value;

fn model_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/p2.json")
}

fn ergo(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ergo")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(args: &[&str]) -> Value {
    let (code, stdout, stderr) = ergo(args);
    assert_eq!(code, 0, "{stderr}");
    serde_json::from_str(&stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn analyze_reports_the_two_state_constants() {
    let m = model_path();
    let r = report(&["analyze", m.to_str().unwrap()]);
    let res = &r["results"];
    assert!((f(&res["kappa"]) - 0.3).abs() < 1e-15);
    assert_eq!(f(&res["kappa0"]), 0.1);
    assert!((f(&res["invariant"][0]) - 2.0 / 3.0).abs() < 1e-12);
    assert!((f(&res["r_v"]) - 0.7).abs() < 1e-10);
    assert_eq!(res["envelope_holds"], Value::Bool(true));
    assert!(r["seed"].is_null());
    assert!(r["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn poisson_whole_space() {
    let m = model_path();
    let r = report(&["poisson", m.to_str().unwrap(), "--observable", "f", "--whole"]);
    let u = &r["results"]["u"];
    assert!((f(&u[0]) - 10.0 / 3.0).abs() < 1e-10);
    assert!((f(&u[1]) + 20.0 / 3.0).abs() < 1e-10);
    assert!(f(&r["results"]["residual"]) <= 1e-10);
}

#[test]
fn ldp_reports_a_verdict() {
    let m = model_path();
    let r = report(&["ldp", m.to_str().unwrap(), "--observable", "f", "--epsilon", "0.3", "--n", "200"]);
    let tail = &r["results"]["tail"];
    assert_eq!(tail["holds"], Value::Bool(true));
    assert!(f(&tail["l"]) > 0.0);
    assert!(f(&tail["log_tail_rate"]) < 0.0);
}

#[test]
fn sampled_runs_are_reproducible() {
    let m = model_path();
    let m = m.to_str().unwrap();
    let runs: [&[&str]; 3] = [
        &["couple", m, "--from", "1", "--to", "2", "--vaserstein", "--paths", "2000", "--seed", "7"],
        &["limits", m, "--observable", "f", "--n", "200", "--replicas", "500", "--seed", "3"],
        &["poisson", m, "--observable", "f", "--boundary", "right", "--boundary-data", "g", "--method", "mc", "--paths", "500"],
    ];
    for args in runs {
        let (c1, a, _) = ergo(args);
        let (c2, b, _) = ergo(args);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert!(v["seed"].is_object(), "sampling must record its seed");
    }
}

#[test]
fn out_and_csv_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("p.csv");
    let m = model_path();
    let (code, stdout, _) = ergo(&[
        "analyze",
        m.to_str().unwrap(),
        "--n-max",
        "10",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["command"]["name"], "analyze");
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("n,worst_tv,kappa_bound,r_v_power"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn errors_map_to_their_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_sum = dir.path().join("bad.json");
    std::fs::write(&bad_sum, r#"{"states":["a","b"],"matrix":[[1.0,0.1],[0.5,0.5]]}"#).unwrap();
    assert_eq!(ergo(&["analyze", bad_sum.to_str().unwrap()]).0, 6);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n\"states\": [\"a\"\n").unwrap();
    assert_eq!(ergo(&["analyze", broken.to_str().unwrap()]).0, 4);

    let m = model_path();
    let m = m.to_str().unwrap();
    assert_eq!(ergo(&["limits", m, "--observable", "nope"]).0, 5);
    assert_eq!(ergo(&["analyze", "/nonexistent/model.json"]).0, 3);
    assert_eq!(ergo(&["analyze"]).0, 2);
    assert_eq!(ergo(&["poisson", m, "--observable", "f", "--method", "mc"]).0, 2);
    // c = -1 makes e^{-c} P expansive
    let neg = dir.path().join("neg.json");
    std::fs::write(
        &neg,
        r#"{"states":["a","b"],"matrix":[[0.9,0.1],[0.2,0.8]],"observables":{"f":[1,0]},"potentials":{"c":[-1,-1]}}"#,
    )
    .unwrap();
    assert_eq!(ergo(&["poisson", neg.to_str().unwrap(), "--observable", "f", "--potential", "c"]).0, 26);
}

fn model_file() -> impl Strategy<Value = ModelFile> {
    (1usize..=5).prop_flat_map(|n| {
        let rows = prop::collection::vec(prop::collection::vec(0.0..1.0f64, n), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().map(|x| x + 0.01).sum();
                    r.into_iter().map(|x| (x + 0.01) / s).collect::<Vec<f64>>()
                })
                .collect::<Vec<_>>()
        });
        let named = prop::collection::btree_map("[a-z]{1,6}", prop::collection::vec(-10.0..10.0f64, n), 0..3);
        let potentials = prop::collection::btree_map("[a-z]{1,6}", prop::collection::vec(0.0..3.0f64, n), 0..3);
        let boundaries = prop::collection::btree_map(
            "[a-z]{1,6}",
            prop::collection::vec(0..n, 1..=n).prop_map(|ix| ix.into_iter().map(|i| format!("s{i}")).collect()),
            0..3,
        );
        (rows, named, potentials, boundaries).prop_map(move |(matrix, observables, potentials, boundaries)| ModelFile {
            states: (0..n).map(|i| format!("s{i}")).collect(),
            initial_laws: matrix.first().map(|r| [("first".to_string(), r.clone())].into()).unwrap_or_default(),
            matrix,
            observables,
            potentials,
            boundaries,
        })
    })
}

proptest! {
    #[test]
    fn emitted_models_parse_back_unchanged(file in model_file()) {
        let parsed = parse_model_str(&emit(&file)).unwrap();
        prop_assert_eq!(parsed.file, file);
    }
}
