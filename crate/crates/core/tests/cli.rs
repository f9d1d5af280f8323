use std::path::Path;
use std::process::{Command, Output};

use quasi_similarity::cli::{
    CounterexampleCommandReport, JoiningsReport, SpectralReport, VerifyReport,
};
use serde::de::DeserializeOwned;

fn qsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsim"))
        .args(args)
        .output()
        .expect("qsim runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse<T: DeserializeOwned>(out: &Output) -> T {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        &["verify-intertwine", "--seed", "5"][..],
        &["spectral-compare", "--seed", "3"],
        &["joinings", "--markov"],
        &["counterexample", "--k", "6,7"],
    ] {
        let first = qsim(args);
        let second = qsim(args);
        assert_eq!(first.status.code(), Some(0), "{args:?}");
        assert!(!first.stdout.is_empty());
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn verify_report_round_trips_and_passes() {
    let out = qsim(&["verify-intertwine"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let report: VerifyReport = serde_json::from_str(&text).unwrap();
    assert!(report.passed);
    assert!(report.assertions.iter().all(|a| a.passed));
    assert!(report.kernel_margins.j.0 > 0.0 && report.kernel_margins.j_adjoint.0 > 0.0);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", text);

    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in [
        "config_echo",
        "intertwine_residual",
        "markov_flags",
        "kernel_margins",
        "xi_max_dev",
        "zeta_max_dev",
    ] {
        assert!(value.get(key).is_some(), "{key}");
    }
    for key in ["J", "J_adjoint", "empty_sector"] {
        assert!(value["kernel_margins"].get(key).is_some(), "{key}");
    }
    assert!(value["intertwine_residual"].is_string());
}

#[test]
fn exit_codes_follow_assertions() {
    let dir = tempfile::tempdir().unwrap();
    // safe_margin below K + 1
    let bad = write_config(dir.path(), r#"{"K": 2, "safe_margin": 2}"#);
    let out = qsim(&["verify-intertwine", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let unknown = write_config(dir.path(), r#"{"weights": [0.5, 0.5]}"#);
    assert_eq!(
        qsim(&["construct", "--config", &unknown]).status.code(),
        Some(2)
    );

    // margins are nowhere near 1, so the strict lower bound fails
    let strict = write_config(dir.path(), r#"{"tolerances": {"kernel_margin": 1.0}}"#);
    let out = qsim(&["verify-intertwine", "--config", &strict]);
    assert_eq!(out.status.code(), Some(1));
    let report: VerifyReport = parse(&out);
    assert!(!report.passed);
    let failed: Vec<&str> = report
        .assertions
        .iter()
        .filter(|a| !a.passed)
        .map(|a| a.name.as_str())
        .collect();
    assert_eq!(failed, ["kernel_margin[J]", "kernel_margin[J*]"]);

    assert_eq!(qsim(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn coefficient_csv() {
    let out = qsim(&["coeffs", "--k", "16", "--raw"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,a_n,running_sum"));
    let rows: Vec<(i64, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 33);
    assert_eq!((rows[0].0, rows[32].0), (-16, 16));
    assert!(rows.windows(2).all(|w| w[1].2 >= w[0].2));
    // independent quadrature of the 33 central coefficients
    assert!(
        (rows[32].2 - 0.9754382801502677).abs() <= 1e-10,
        "{}",
        rows[32].2
    );

    let normalized = stdout(&qsim(&["coeffs", "--k", "16"]));
    let last = normalized.lines().last().unwrap();
    let sum: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((sum - 1.0).abs() <= 1e-15);
}

#[test]
fn counterexample_at_eight() {
    let out = qsim(&["counterexample", "--k", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let report: CounterexampleCommandReport = parse(&out);
    let row = &report.runs[0];
    assert_eq!(row.bound.0, 2f64.powi(-10));
    assert!(row.measured.0 <= row.bound.0 * row.g_norm.0 + 1e-12);
    assert!(report.passed);
}

#[test]
fn conjugate_permutations_are_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let left = dir.path().join("left.json");
    let right = dir.path().join("right.json");
    std::fs::write(&left, r#"{"permutation": [1, 2, 0, 4, 3]}"#).unwrap();
    std::fs::write(&right, r#"{"permutation": [4, 3, 0, 1, 2]}"#).unwrap();
    let out = qsim(&[
        "spectral-compare",
        "--left",
        left.to_str().unwrap(),
        "--right",
        right.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: SpectralReport = parse(&out);
    assert!(report.equivalent);

    std::fs::write(&right, r#"{"permutation": [1, 2, 3, 4, 0]}"#).unwrap();
    let report: SpectralReport = parse(&qsim(&[
        "spectral-compare",
        "--left",
        left.to_str().unwrap(),
        "--right",
        right.to_str().unwrap(),
    ]));
    assert!(!report.equivalent);

    let report: SpectralReport = parse(&qsim(&["spectral-compare"]));
    assert!(report.equivalent && report.passed);
}

#[test]
fn coprime_rotations_have_zero_dimensional_joining_space() {
    let dir = tempfile::tempdir().unwrap();
    let left = dir.path().join("z2.json");
    let right = dir.path().join("z3.json");
    std::fs::write(
        &left,
        r#"{"n": 2, "permutation": [1, 0], "p": ["1/2", "0.5"]}"#,
    )
    .unwrap();
    std::fs::write(
        &right,
        r#"{"n": 3, "permutation": [1, 2, 0], "p": ["1/3", "1/3", "1/3"]}"#,
    )
    .unwrap();
    let out = qsim(&[
        "joinings",
        "--left",
        left.to_str().unwrap(),
        "--right",
        right.to_str().unwrap(),
        "--markov",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: JoiningsReport = parse(&out);
    assert_eq!(report.d, 0);
    assert!(report.disjoint && report.basis.is_empty());
    assert!(report.particular.iter().flatten().all(|v| v == "1/6"));
    assert!(report.markov.is_some());

    let out_path = dir.path().join("report.json");
    let out = qsim(&["joinings", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written: JoiningsReport =
        serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(written.d, 0);
}
