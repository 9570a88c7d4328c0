use std::path::Path;
use std::process::{Command, Output};

fn ckn_lab(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckn-lab")).args(args).arg("--out-dir").arg(out_dir).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Data rows of a `#`-commented CSV, keyed by the column line.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (columns, rows)
}

#[test]
fn params_prints_exact_and_float_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = ckn_lab(&["params", "--n", "4", "--p", "2", "--q", "2.5", "--mu", "1"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\"4/9\"") && text.contains("0.4444444444444444"), "{text}");
    let file = json(&dir.path().join("params.json"));
    assert_eq!(file["r"], "3");
    assert_eq!(file["a"], "4/9");
    assert_eq!(file["a_value"], 0.4444444444444444);
    assert_eq!(file["header"]["run_spec"]["command"], "params");
}

#[test]
fn params_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("raw.json");
    std::fs::write(&file, r#"{"n": 4, "p": "2", "q": "5/2", "mu": "1"}"#).unwrap();
    let out = ckn_lab(&["params", "--params-file", file.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("\"4/9\""));
}

#[test]
fn euclidean_curves_sit_on_the_equality_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = ckn_lab(&["curves", "--model", "euclidean:n=4", "--C-multiple", "1.0"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("curves.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# tool: ckn-lab"));
    assert!(text.lines().any(|l| l.starts_with("# run_spec: ")));
    assert!(text.lines().any(|l| l.starts_with("# params: ")));
    let (columns, rows) = csv_rows(&path);
    assert_eq!(columns, ["lambda", "F", "G", "H0", "F_prime", "ode_residual_G", "ineq_slack_F"]);
    assert_eq!(rows.len(), 13);
    for row in rows {
        assert!(((row[1] - row[2]) / row[2]).abs() < 1e-8);
        assert!(row[6].abs() < 1e-6);
    }
}

#[test]
fn cone_with_euclidean_constant_fails_the_volume_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = ckn_lab(&["volume-bound", "--model", "cone:n=4,c=0.5", "--C-multiple", "1.0", "--C0", "1"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("verdict: FAIL"));
    let report = json(&dir.path().join("volume_bound.json"));
    assert_eq!(report["verdict"], "FAIL");
    assert_eq!(report["report"]["pass"], false);

    let out = ckn_lab(&["volume-bound", "--model", "euclidean:n=4"], dir.path());
    assert!(stdout(&out).contains("verdict: PASS"));
}

#[test]
fn copt_reports_both_routes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ckn_lab(&["copt"], dir.path()).status.success());
    let report = json(&dir.path().join("copt.json"));
    let copt = report["copt_quadrature"]["copt"].as_f64().unwrap();
    let closed = report["copt_closed_form"]["value"].as_f64().unwrap();
    assert!(copt > 0.0 && closed > 0.0);
    assert_eq!(report["copt_closed_form"]["delta"], 3.0);
    // serde_json's default float parser may be off by an ulp
    assert!((report["ratio"].as_f64().unwrap() - closed / copt).abs() < 1e-15);
}

#[test]
fn extremal_check_and_audit_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ckn_lab(&["extremal-check"], dir.path()).status.success());
    let check = json(&dir.path().join("extremal_check.json"));
    assert!(check["max_abs_rel_gap"].as_f64().unwrap() < 1e-8);
    assert_eq!(check["perturbations"].as_array().unwrap().len(), 20);
    assert!(check["min_change"].as_f64().unwrap() >= -1e-9);

    assert!(ckn_lab(&["audit", "--model", "cone:c=0.5"], dir.path()).status.success());
    let audit = json(&dir.path().join("audit.json"));
    assert_eq!(audit["doubling_constant"], 1.0);
    assert_eq!(audit["origin_density"], 0.5);
    let copt = audit["copt"].as_f64().unwrap();
    let implied = audit["implied_best_constant"].as_f64().unwrap();
    assert!((implied / copt - 0.5f64.powf(-1.0 / 9.0)).abs() < 1e-12);
}

#[test]
fn minimize_writes_result_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        ckn_lab(&["minimize", "--method", "coordinate-descent", "--seeds", "1,2", "--grid-size", "64"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result = json(&dir.path().join("minimize.json"));
    assert_eq!(result["runs"].as_array().unwrap().len(), 2);
    assert!(result["best"]["converged"].as_bool().unwrap());
    assert!(result["rel_gap_to_inverse_copt"].as_f64().unwrap() > -5e-3);
    let (columns, rows) = csv_rows(&dir.path().join("best_profile.csv"));
    assert_eq!(columns, ["t", "u"]);
    assert_eq!(rows.len(), 65);

    assert!(ckn_lab(&["minimize"], dir.path()).status.success());
    let family = json(&dir.path().join("minimize.json"));
    assert!(family["rel_gap_to_inverse_copt"].as_f64().unwrap().abs() < 1e-8);
    assert!(family["best"]["flatness"]["spread"].as_f64().unwrap() < 1e-8);
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 7] = [
        &["params", "--n", "4", "--p", "3", "--q", "2", "--mu", "1"],
        &["params", "--n", "4", "--p", "2"],
        &["curves", "--C-multiple", "0.5"],
        &["curves", "--model", "sphere:n=4"],
        &["audit", "--model", "table:missing.csv,n=4"],
        &["params", "--params-file", "missing.json"],
        &["no-such-command"],
    ];
    for args in cases {
        let out = ckn_lab(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(!err.trim().is_empty(), "{args:?}");
    }
    let out = ckn_lab(&["params", "--n", "4", "--p", "3", "--q", "2", "--mu", "1"], dir.path());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("p+mu < n"), "{err}");
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = ckn_lab(
        &["minimize", "--method", "coordinate-descent", "--seeds", "1", "--grid-size", "64", "--max-iters", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
    assert!(!dir.path().join("minimize.json").exists());
}

#[test]
fn tabulated_models_load_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("density.csv");
    std::fs::write(&table, "t,relative_density\n0.5,1\n1,1\n2,2\n").unwrap();
    let spec = format!("table:{},n=4", table.display());
    assert!(ckn_lab(&["audit", "--model", &spec], dir.path()).status.success());
    let audit = json(&dir.path().join("audit.json"));
    let doubling = audit["doubling_constant"].as_f64().unwrap();
    assert!(doubling > 1.0 && doubling <= 2.0);
    assert_eq!(audit["origin_density"], 1.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["curves", "--model", "cone:n=4,c=0.5", "--C-multiple", "1.5"],
        &["copt"],
        &["extremal-check"],
        &["minimize", "--method", "coordinate-descent", "--seeds", "3,4", "--grid-size", "32"],
    ];
    let files = ["curves.csv", "copt.json", "extremal_check.json", "minimize.json"];
    for (args, file) in runs.iter().zip(files) {
        assert!(ckn_lab(args, dir.path()).status.success(), "{args:?}");
        let first = std::fs::read(dir.path().join(file)).unwrap();
        assert!(ckn_lab(args, dir.path()).status.success());
        let second = std::fs::read(dir.path().join(file)).unwrap();
        assert_eq!(first, second, "{file}");
    }
    // no temporary files left behind
    let names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(names.iter().all(|n| !n.starts_with(".tmp")), "{names:?}");
}
