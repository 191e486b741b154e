use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbitlap"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUADRANT: [&str; 4] = ["0,0,2,0,4", "1,0,0,1,1", "1,-1,1,1,2", "1.7320508075688772,0,0,-1.7320508075688772,3"];

fn matrix_file(dir: &TempDir, name: &str, rows: &[&str]) -> PathBuf {
    let mut text = format!("matrix,2,2,{}\nx1_1,x1_2,x2_1,x2_2,w\n", rows.len());
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    write(dir, name, &text)
}

fn finite_setup(dir: &TempDir) -> (PathBuf, String) {
    let data = write(dir, "ex1.csv", "vector,2,1,1\ny1,y2,w\n2,0,1\n");
    let group = write(dir, "g.json", "[[[1,0],[0,1]],[[-1,0],[0,-1]],[[1,-1],[0,-1]],[[-1,1],[0,1]]]");
    (data, format!("finite:{}", s(&group)))
}

fn matrix_of(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()).collect()
}

fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn estimate_finite_set_lists_both_mles() {
    let dir = TempDir::new().unwrap();
    let (data, model) = finite_setup(&dir);
    let out = run(&["estimate", s(&data), "--model", &model]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    let c = report["concentrations"].as_array().unwrap();
    assert_eq!(c.len(), 2);
    assert!(close(&matrix_of(&c[0]["psi"]), &[vec![0.5, 0.0], vec![0.0, 0.5]], 1e-12));
    assert!(close(&matrix_of(&c[1]["psi"]), &[vec![0.5, -0.5], vec![-0.5, 1.0]], 1e-12));
    assert_eq!(report["mle_unique"], "finite_family");
}

#[test]
fn estimate_report_schema_is_fixed() {
    let dir = TempDir::new().unwrap();
    let data = matrix_file(&dir, "rot.csv", &QUADRANT[1..3]);
    let out = run(&["estimate", s(&data), "--model", "leftright"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    let mut keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "alpha",
            "c",
            "concentrations",
            "iterations",
            "lie_dim",
            "mle_unique",
            "model",
            "n",
            "objective",
            "objective_bound",
            "p",
            "q",
            "residual",
            "stability",
            "termination"
        ]
    );
    let psi = matrix_of(&report["concentrations"][0]["psi"]);
    let two_eye: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 2.0 } else { 0.0 }).collect()).collect();
    assert!(close(&psi, &two_eye, 1e-9));
    assert_eq!(report["stability"], "polystable");
    assert_eq!(report["lie_dim"], 1);
    assert_eq!(report["mle_unique"], "unique");
    // Floats carry 17 significant digits.
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"c\":4.0000000000000000e0"));
}

#[test]
fn estimate_without_mle_exits_two() {
    let dir = TempDir::new().unwrap();
    let single = matrix_file(&dir, "a.csv", &QUADRANT[..1]);
    let out = run(&["estimate", s(&single), "--model", "leftright"]);
    assert_eq!(code(&out), 2);
    let report = json(&out);
    assert_eq!(report["stability"], "unstable");
    assert!(report["objective"].is_null());
    assert!(report["concentrations"].as_array().unwrap().is_empty());

    let pair = matrix_file(&dir, "b.csv", &QUADRANT[..2]);
    let out = run(&["estimate", s(&pair), "--model", "leftright"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["stability"], "semistable_not_polystable");
}

#[test]
fn classify_reports_each_quadrant_case() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], &str, Option<u64>); 4] = [
        (&QUADRANT[..1], "unstable", None),
        (&QUADRANT[..2], "semistable_not_polystable", None),
        (&QUADRANT[1..2], "polystable", Some(3)),
        (&QUADRANT[1..], "stable", Some(0)),
    ];
    for (k, (rows, class, lie_dim)) in cases.iter().enumerate() {
        let data = matrix_file(&dir, &format!("c{k}.csv"), rows);
        let out = run(&["classify", s(&data), "--model", "leftright"]);
        assert_eq!(code(&out), 0);
        let report = json(&out);
        assert_eq!(report["stability"], *class);
        if let Some(d) = lie_dim {
            assert_eq!(report["lie_dim"], *d);
        }
    }
    let zero = matrix_file(&dir, "zero.csv", &["0,0,0,0,1"]);
    assert_eq!(json(&run(&["classify", s(&zero), "--model", "leftright"]))["stability"], "unstable");
}

#[test]
fn exhausted_budget_exits_three() {
    let dir = TempDir::new().unwrap();
    let pair = matrix_file(&dir, "b.csv", &QUADRANT[..2]);
    for cmd in ["classify", "estimate"] {
        let out = run(&[cmd, s(&pair), "--model", "leftright", "--max-iter", "5"]);
        assert_eq!(code(&out), 3);
        assert_eq!(json(&out)["stability"], "inconclusive");
    }
}

#[test]
fn config_and_threshold_files_apply() {
    let dir = TempDir::new().unwrap();
    let pair = matrix_file(&dir, "b.csv", &QUADRANT[..2]);
    let config = write(&dir, "run.json", r#"{"model": "leftright", "max_iter": 5}"#);
    let out = run(&["classify", s(&pair), "--config", s(&config)]);
    assert_eq!(code(&out), 3);
    let out = run(&["classify", s(&pair), "--config", s(&config), "--max-iter", "10000"]);
    assert_eq!(code(&out), 0);
    // An enormous plateau window leaves the run undecided.
    let thresholds = write(&dir, "t.json", r#"{"plateau_window": 1000000}"#);
    let out = run(&["classify", s(&pair), "--model", "leftright", "--thresholds", s(&thresholds)]);
    assert_eq!(code(&out), 3);
    let bad = write(&dir, "bad.json", r#"{"plateau_windw": 5}"#);
    assert_eq!(code(&run(&["classify", s(&pair), "--model", "leftright", "--thresholds", s(&bad)])), 1);
    // Relative finite-set paths resolve against the config file.
    let (data, _) = finite_setup(&dir);
    let config = write(&dir, "finite.json", r#"{"model": "finite:g.json"}"#);
    assert_eq!(code(&run(&["estimate", s(&data), "--config", s(&config)])), 0);
}

#[test]
fn parse_errors_point_at_line_and_column() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "bad.csv", "vector,2,1,2\ny1,y2,w\n1,2,1\n3,x,1\n");
    let out = run(&["estimate", s(&data)]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:4:2:"), "{err}");

    let bad_group = write(&dir, "g.json", "[[[2,0],[0,1]]]");
    let ok = write(&dir, "ok.csv", "vector,2,1,1\ny1,y2,w\n1,2,1\n");
    let out = run(&["estimate", s(&ok), "--model", &format!("finite:{}", s(&bad_group))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("determinant"));

    let out = run(&["estimate", s(&ok), "--model", "leftright"]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&run(&["estimate", "/nonexistent/data.csv"])), 1);
    assert_eq!(code(&run(&["estimate", s(&ok), "--bogus"])), 1);
}

#[test]
fn sampling_is_reproducible_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "p.json", r#"{"kind": "vector", "sigma": [[1, 0], [0, 1]]}"#);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let out = run(&["sample", "--params", s(&params), "--count", "5", "--seed", "7", "--output", s(path)]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("vector,2,1,5\ny1,y2,w\n"));
    assert_eq!(code(&run(&["estimate", s(&a)])), 0);

    let matrix = write(&dir, "m.json", r#"{"kind": "matrix", "sigma1": [[2, 0.5], [0.5, 1]], "sigma2": [[1]]}"#);
    let out = run(&["sample", "--params", s(&matrix), "--count", "3"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("matrix,2,1,3\nx1_1,x2_1,w\n"));

    let out = run(&["sample", "--params", s(&params), "--count", "5", "--output", "/nonexistent/dir/x.csv"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn large_sample_recovers_sigma() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "p.json", r#"{"kind": "vector", "sigma": [[2, 0], [0, 1]]}"#);
    let data = dir.path().join("big.csv");
    let out = run(&["sample", "--params", s(&params), "--count", "100000", "--seed", "3", "--output", s(&data)]);
    assert_eq!(code(&out), 0);
    let report = json(&run(&["estimate", s(&data)]));
    let psi = matrix_of(&report["concentrations"][0]["psi"]);
    let det = psi[0][0] * psi[1][1] - psi[0][1] * psi[1][0];
    let sigma_hat = [[psi[1][1] / det, -psi[0][1] / det], [-psi[1][0] / det, psi[0][0] / det]];
    let sigma = [[2.0, 0.0], [0.0, 1.0]];
    for i in 0..2 {
        for j in 0..2 {
            // Off-diagonal entries are compared against the diagonal scale.
            let scale = if i == j { sigma[i][j] } else { 1.0 };
            assert!((sigma_hat[i][j] - sigma[i][j]).abs() <= 0.1 * scale, "{sigma_hat:?}");
        }
    }
}

#[test]
fn loglik_values_and_pole() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "p.json", r#"{"kind": "vector", "sigma": [[1]]}"#);
    let one = write(&dir, "one.csv", "vector,1,1,1\ny1,w\n1,1\n");
    let report = json(&run(&["loglik", s(&one), "--params", s(&params)]));
    let observed = report["observed"].as_f64().unwrap();
    let constant = report["observed_constant"].as_f64().unwrap();
    assert_eq!(report["nu"].as_f64(), Some(0.5));
    assert!((observed + constant - 0.171_909_491_538_361_9f64.ln()).abs() < 1e-12);

    let two = write(&dir, "two.csv", "vector,1,1,2\ny1,w\n1,1\n1,1\n");
    let doubled = json(&run(&["loglik", s(&two), "--params", s(&params)]));
    for key in ["observed", "complete"] {
        let (a, b) = (report[key].as_f64().unwrap(), doubled[key].as_f64().unwrap());
        assert!((b - 2.0 * a).abs() < 1e-12, "{key}");
    }

    let zero = write(&dir, "zero.csv", "vector,2,1,1\ny1,y2,w\n0,0,1\n");
    let p2 = write(&dir, "p2.json", r#"{"kind": "vector", "sigma": [[1, 0], [0, 1]]}"#);
    let out = run(&["loglik", s(&zero), "--params", s(&p2)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("pole"));
}

#[test]
fn complete_loglik_at_the_estimate_matches_the_bound() {
    let dir = TempDir::new().unwrap();
    let data = matrix_file(&dir, "d.csv", &QUADRANT[1..]);
    let report = json(&run(&["estimate", s(&data), "--model", "leftright"]));
    let inv2 = |m: Vec<Vec<f64>>| {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        vec![vec![m[1][1] / det, -m[0][1] / det], vec![-m[1][0] / det, m[0][0] / det]]
    };
    let c = &report["concentrations"][0];
    let params = serde_json::json!({
        "kind": "matrix",
        "sigma1": inv2(matrix_of(&c["psi1"])),
        "sigma2": inv2(matrix_of(&c["psi2"])),
    });
    let params = write(&dir, "p.json", &params.to_string());
    let ll = json(&run(&["loglik", s(&data), "--params", s(&params)]));
    let complete = ll["complete"].as_f64().unwrap();
    let bound = report["objective_bound"].as_f64().unwrap();
    assert!((complete - bound).abs() <= 1e-8 * bound.abs());
}

#[test]
fn selftest_exit_codes() {
    let first = run(&["selftest"]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, run(&["selftest"]).stdout);
    let corrupted = run(&["selftest", "--bessel-offset", "1e-9"]);
    assert_eq!(code(&corrupted), 4);
    assert!(String::from_utf8_lossy(&corrupted.stdout).contains("FAIL  bessel_half_order"));
}

#[test]
fn log_level_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let data = matrix_file(&dir, "d.csv", &QUADRANT[1..]);
    let out = bin().args(["estimate", s(&data), "--model", "leftright"]).env("ORBITLAP_LOG", "debug").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("flip-flop stopped"));
    let quiet = bin().args(["estimate", s(&data), "--model", "leftright"]).env_remove("ORBITLAP_LOG").output().unwrap();
    assert!(quiet.stderr.is_empty());
}
