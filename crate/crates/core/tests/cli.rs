use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn normgeo(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_normgeo"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

const IDENTITY_METRIC: &str = r#"{
  "point": {"sigma": [[1, 0], [0, 1]], "mu": [0, 0]},
  "t1": {"x": [[1, 0], [0, 1]], "v": [0, 0]},
  "t2": {"x": [[1, 0], [0, 1]], "v": [0, 0]}
}"#;

const TRANSVERSAL: &str = r#"{
  "p0": {"sigma": [[2, 0.3], [0.3, 1]], "mu": [1, -1]},
  "v0": {"x": [[0, 0], [0, 0]], "v": [0.5, 1.5]}
}"#;

#[test]
fn metric_reports_both_inner_products() {
    let out = normgeo(&["metric"], IDENTITY_METRIC);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["outputs"]["fisher"].as_f64(), Some(1.0));
    assert!((r["outputs"]["killing"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn mean_directions_have_no_trace_term() {
    let input = r#"{
      "point": {"sigma": [[2, 0.5], [0.5, 1]], "mu": [1, 2]},
      "t1": {"x": [[0, 0], [0, 0]], "v": [1, -1]},
      "t2": {"x": [[0, 0], [0, 0]], "v": [0.5, 3]}
    }"#;
    let r = report(&normgeo(&["metric", "--metric", "killing"], input));
    assert_eq!(r["outputs"]["fisher"], r["outputs"]["killing"]);
    assert_eq!(r["outputs"]["difference"].as_f64(), Some(0.0));
}

#[test]
fn parse_failures_exit_2() {
    let asymmetric = IDENTITY_METRIC.replacen("[[1, 0], [0, 1]]", "[[1, 0.5], [0, 1]]", 1);
    assert_eq!(normgeo(&["metric"], &asymmetric).status.code(), Some(2));
    let indefinite = IDENTITY_METRIC.replacen("[[1, 0], [0, 1]]", "[[1, 2], [2, 1]]", 1);
    assert_eq!(normgeo(&["metric"], &indefinite).status.code(), Some(2));
    assert_eq!(normgeo(&["metric"], "not json").status.code(), Some(2));
    assert_eq!(
        normgeo(&["metric", "--input", "/nonexistent/file.json"], "")
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn domain_failures_exit_3() {
    let unequal = r#"{"p1": {"sigma": [[1]], "mu": [0]}, "p2": {"sigma": [[1]], "mu": [1]}}"#;
    let out = normgeo(&["distance", "--method", "leaf"], unequal);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("means differ"));

    let tilted = TRANSVERSAL.replace(r#""x": [[0, 0], [0, 0]]"#, r#""x": [[1, 0], [0, 0]]"#);
    assert_eq!(normgeo(&["defect"], &tilted).status.code(), Some(3));
}

#[test]
fn definiteness_loss_exits_3_and_names_the_time() {
    let input = r#"{"p0": {"sigma": [[1, 0], [0, 1]], "mu": [0, 0]},
                    "v0": {"x": [[0, 0], [0, 0]], "v": [0, 50]}}"#;
    let out = normgeo(&["geodesic", "--steps", "16"], input);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t ="));
}

#[test]
fn leaf_distance_matches_closed_form() {
    let e2 = std::f64::consts::E.powi(2);
    let input = format!(
        r#"{{"p1": {{"sigma": [[1, 0], [0, 1]], "mu": [0, 0]}},
                            "p2": {{"sigma": [[{e2}, 0], [0, {e2}]], "mu": [0, 0]}}}}"#
    );
    for method in ["leaf", "bvp"] {
        let r = report(&normgeo(&["distance", "--method", method], &input));
        assert!(
            (r["outputs"]["distance"].as_f64().unwrap() - 2.0).abs() < 1e-9,
            "{method}"
        );
    }
    let same = r#"{"p1": {"sigma": [[2]], "mu": [1]}, "p2": {"sigma": [[2]], "mu": [1]}}"#;
    let r = report(&normgeo(&["distance", "--method", "bvp"], same));
    assert_eq!(r["outputs"]["distance"].as_f64(), Some(0.0));
}

#[test]
fn verify_passes_and_negative_control_fails() {
    let out = normgeo(&["verify"], "");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(report(&out)["passed"], Value::Bool(true));

    let out = normgeo(&["verify", "--tolerance-scale", "1e-30"], "");
    assert_eq!(out.status.code(), Some(1));
    assert!(!report(&out)["outputs"]["failed"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["compare", "--dim", "2", "--count", "4", "--seed", "7"];
    let a = normgeo(&args, "");
    let b = normgeo(&args, "");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let a = normgeo(&["verify", "--seed", "3"], "");
    let b = normgeo(&["verify", "--seed", "3"], "");
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn defect_table_tracks_the_analytic_column() {
    let dir = std::env::temp_dir().join(format!("normgeo-defect-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv_path = dir.join("defect.csv");
    let out = normgeo(
        &["defect", "--csv", csv_path.to_str().unwrap()],
        TRANSVERSAL,
    );
    assert!(out.status.success());
    let r = report(&out);
    assert!(r["outputs"]["max_reference_error"].as_f64().unwrap() < 1e-8);

    let mut rows = csv::Reader::from_path(&csv_path).unwrap();
    let header = rows.headers().unwrap().clone();
    assert_eq!(&header[0], "t");
    let mut last_delta = f64::INFINITY;
    for rec in rows.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let (delta, analytic): (f64, f64) = (rec[3].parse().unwrap(), rec[4].parse().unwrap());
        assert!((delta - analytic).abs() * t < 1e-8);
        if t >= 1.0 {
            assert!(delta < last_delta);
            last_delta = delta;
        }
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn killing_geodesic_reproduces_canonical_curve() {
    let canonical = r#"{"p0": {"sigma": [[1, 0], [0, 1]], "mu": [0, 0]},
                        "v0": {"x": [[0, 0], [0, 0]], "v": [2, 0]}}"#;
    let r = report(&normgeo(
        &["geodesic", "--metric", "killing", "--steps", "20"],
        canonical,
    ));
    let table = &r["table"];
    for row in table["rows"].as_array().unwrap() {
        let row: Vec<f64> = row
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        let c = (2.0 * row[0]).cosh();
        assert!((row[1] - c.powi(-2)).abs() < 1e-12);
        assert!((row[3] - 1.0 / c).abs() < 1e-12);
        assert!((row[4] - (2.0 * row[0]).tanh()).abs() < 1e-12);
        assert!((row[6] - 4.0).abs() < 1e-10);
    }
}

#[test]
fn fisher_geodesic_conserves_energy_and_rests_at_zero_velocity() {
    let r = report(&normgeo(&["geodesic", "--steps", "400"], TRANSVERSAL));
    assert!(r["outputs"]["energy_drift"].as_f64().unwrap() < 1e-7);

    let rest = TRANSVERSAL.replace(r#""v": [0.5, 1.5]"#, r#""v": [0, 0]"#);
    let r = report(&normgeo(&["geodesic", "--steps", "16"], &rest));
    let rows = r["table"]["rows"].as_array().unwrap();
    for row in rows {
        assert_eq!(
            row.as_array().unwrap()[1..],
            rows[0].as_array().unwrap()[1..]
        );
    }
}

#[test]
fn report_numbers_round_trip() {
    let out = normgeo(&["metric"], TRANSVERSAL_METRIC);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    for key in ["fisher", "killing", "difference", "trace_term"] {
        let x = v["outputs"][key].as_f64().unwrap();
        let printed = serde_json::to_string(&x).unwrap();
        assert!(
            text.contains(&format!("\"{key}\": {printed}")),
            "{key} = {printed}"
        );
    }
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
}

const TRANSVERSAL_METRIC: &str = r#"{
  "point": {"sigma": [[2, 0.3], [0.3, 1]], "mu": [1, -1]},
  "t1": {"x": [[0.1, 0.7], [0.7, -0.2]], "v": [0.5, 1.5]},
  "t2": {"x": [[1, 0], [0, 3]], "v": [-1, 0.25]}
}"#;
