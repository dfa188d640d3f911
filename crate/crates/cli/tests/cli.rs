//! End-to-end runs of the `infconv` binary.

use std::path::Path;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn infconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parses a one-dimensional `x,value` CSV body.
fn csv_pairs(out: &Output) -> Vec<(f64, f64)> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    lines
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

#[test]
fn moreau_of_abs_is_huber_on_a_fine_grid() {
    let out = infconv(&[
        "moreau",
        "--f",
        &data("abs.json"),
        "--alpha",
        "1",
        "--grid=-3:3:601",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let pairs = csv_pairs(&out);
    assert_eq!(pairs.len(), 601);
    for (x, v) in pairs.into_iter().filter(|(x, _)| x.abs() <= 2.5) {
        let huber = if x.abs() <= 0.5 {
            x * x
        } else {
            x.abs() - 0.25
        };
        assert!((v - huber).abs() < 1e-9, "x = {x}: {v}");
    }
}

#[test]
fn envelope_with_an_asymmetric_gauge() {
    let out = infconv(&[
        "envelope",
        "--f",
        &data("abs.json"),
        "--phi",
        &data("gauge_asym.json"),
        "--grid=-2:2:41",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // moving right costs half as much, so left of 0 the envelope is |x|/2
    for (x, v) in csv_pairs(&out) {
        let want = if x < 0.0 { -x / 2.0 } else { x };
        assert!((v - want).abs() < 1e-9, "x = {x}: {v}");
    }
}

#[test]
fn envelope_reads_a_sampled_function_back() {
    let dir = tempfile::tempdir().unwrap();
    let sampled = dir.path().join("f.csv");
    let first = infconv(&[
        "distance",
        "--target",
        &data("unit_interval.json"),
        "--grid=-2:3:51",
        "--out",
        arg(&sampled),
    ]);
    assert!(first.status.success());
    let out = infconv(&["envelope", "--f", arg(&sampled), "--phi", &data("sq.json")]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(csv_pairs(&out).len(), 51);
    // a CSV carries its own grid
    let clash = infconv(&[
        "envelope",
        "--f",
        arg(&sampled),
        "--phi",
        &data("sq.json"),
        "--grid=-1:1:3",
    ]);
    assert_eq!(clash.status.code(), Some(2));
}

#[test]
fn minimal_time_as_json() {
    let out = infconv(&[
        "mintime",
        "--target",
        &data("point_pair_2d.json"),
        "--dynamics",
        &data("tall_polygon.json"),
        "--grid=-2:2:5,-3:3:7",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["grid"], "-2:2:5,-3:3:7");
    let points = json["points"].as_array().unwrap();
    let values = json["values"].as_array().unwrap();
    assert_eq!(points.len(), 35);
    for (p, v) in points.iter().zip(values) {
        let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        let rho = |dx: f64, dy: f64| dx.abs().max(dy.abs() / 3.0);
        let want = rho(1.0 - x, -y).min(rho(-1.0 - x, -y));
        assert!((v.as_f64().unwrap() - want).abs() < 1e-12, "({x}, {y})");
    }
}

#[test]
fn configuration_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    let (abs, pair, corpus) = (
        data("abs.json"),
        data("point_pair_2d.json"),
        data("corpus_small.json"),
    );
    let cases: Vec<Vec<&str>> = vec![
        vec!["moreau", "--f", arg(&bad), "--alpha", "1", "--grid=-1:1:3"],
        vec!["moreau", "--f", &abs, "--alpha", "1", "--grid=-1:1:1"],
        vec!["moreau", "--f", &abs, "--alpha", "1"],
        vec!["distance", "--target", &pair, "--grid=-1:1:5"],
        vec!["check", "--corpus", arg(&bad)],
        vec!["check", "--corpus", &corpus, "--tol", "bogus=1"],
        vec!["check", "--corpus", &corpus, "--tol", "gradient"],
        vec!["check", "--corpus", &corpus, "--checks", "no_such_check"],
        vec!["--threads", "0", "check", "--corpus", &corpus],
        vec!["moreau", "--alpha", "1"],
    ];
    for args in cases {
        let out = infconv(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn check_gates_on_failures_and_report_does_not() {
    let corpus = data("corpus_small.json");
    let ok = infconv(&["check", "--corpus", &corpus]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["summary"]["fail"], 0);
    assert!(report["summary"]["pass"].as_u64().unwrap() > 0);

    let tight = [
        "--corpus",
        &corpus,
        "--checks",
        "gradient_formula",
        "--tol",
        "gradient=1e-15",
        "--tol",
        "gradient_h=1e-15",
    ];
    let failing = infconv(&[&["check"], &tight[..]].concat());
    assert_eq!(
        failing.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&failing.stderr)
    );
    assert!(String::from_utf8_lossy(&failing.stderr).contains("fail"));
    let exported = infconv(&[&["report"], &tight[..]].concat());
    assert_eq!(exported.status.code(), Some(0));
    let csv = String::from_utf8(exported.stdout).unwrap();
    assert!(csv.lines().skip(1).any(|l| l.contains(",fail,")), "{csv}");
}

#[test]
fn output_does_not_depend_on_the_thread_count() {
    let corpus = data("corpus_small.json");
    let one = infconv(&[
        "--threads",
        "1",
        "report",
        "--corpus",
        &corpus,
        "--seed",
        "3",
    ]);
    let many = infconv(&[
        "--threads",
        "4",
        "report",
        "--corpus",
        &corpus,
        "--seed",
        "3",
    ]);
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
    let (target, dynamics) = (data("point_pair_2d.json"), data("tall_polygon.json"));
    let args = [
        "--grid=-2:2:33,-2:2:33",
        "--target",
        &target,
        "--dynamics",
        &dynamics,
    ];
    let a = infconv(&[&["--threads", "1", "mintime"], &args[..]].concat());
    let b = infconv(&[&["mintime"], &args[..]].concat());
    assert_eq!(a.stdout, b.stdout);
}
