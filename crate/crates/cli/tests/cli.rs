use assert_cmd::Command;

fn orthoflow() -> Command {
    Command::cargo_bin("orthoflow").unwrap()
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_rejects_overlapping_bands() {
    let dir = tempfile::tempdir().unwrap();
    let out = orthoflow()
        .args(["gen", "--N", "4", "--eps", "0.1", "--out"])
        .arg(dir.path().join("d.onsf"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[4, 8]") && err.contains("[5, 10]") && err.contains("overlap"), "{err}");
}

#[test]
fn gen_rejects_large_delta() {
    let dir = tempfile::tempdir().unwrap();
    let out = orthoflow()
        .args(["gen", "--N", "64", "--eps", "0.5", "--delta", "0.2", "--out"])
        .arg(dir.path().join("d.onsf"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn gen_then_norms_then_decomposed_solve() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("d.onsf");
    orthoflow()
        .args(["gen", "--N", "3", "--eps", "0.5", "--allow-overlap", "--budget", "hypothesis", "--out"])
        .arg(&snap)
        .assert()
        .success();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    assert_eq!(report["params"]["n"], 3);
    assert_eq!(report["checks"].as_array().unwrap().len(), 6);

    let out = orthoflow().arg("norms").arg("--in").arg(&snap).output().unwrap();
    assert!(out.status.success());
    let table = stdout(&out);
    assert!(table.starts_with("component,norm,method,value\n"), "{table}");
    assert_eq!(table.lines().count(), 1 + 3 * 5);

    let csv = dir.path().join("trace.csv");
    orthoflow()
        .args(["solve", "--mode", "decomposed", "--T", "0.01", "--dt", "1e-3", "--stride", "5", "--in"])
        .arg(&snap)
        .arg("--csv")
        .arg(&csv)
        .assert()
        .success();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,l2,grad_l2,l3,divergence,energy_defect,residual_l2,residual_l3,defect");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[8] < 1e-12));
}

#[test]
fn scan_single_n_has_no_slope() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let out = orthoflow().args(["scan", "--eps", "0.25", "--N", "4", "--json"]).arg(&json).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("N,F_l1l3,u1_l3,u2_l3,u3_l3,ratio\n4,"), "{text}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert!(v["slope"].is_null());
    assert!(v["rows"][0]["ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn largeness_reports_crossover() {
    let out = orthoflow().args(["largeness", "--N", "16,64,256", "--eps", "0.5", "--M", "0.25"]).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("smallest N above M = 0.25: 64"), "{text}");
}

#[test]
fn verify_invariants_exits_zero() {
    let out = orthoflow().args(["verify", "--suite", "invariants", "--seed", "7"]).output().unwrap();
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("seed 7: all passed"));
}

#[test]
fn config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"params": {"n": 4, "eps": 0.5, "delta": 0.05, "c": 1.0, "allow_band_overlap": true},
            "grid": [16, 16, 16],
            "evolution": {"t_final": 0.1, "dt": 0.01, "trace_stride": 1}}"#,
    )
    .unwrap();
    let once = stdout(&orthoflow().arg("config").arg("--in").arg(&path).output().unwrap());
    std::fs::write(&path, &once).unwrap();
    let twice = stdout(&orthoflow().arg("config").arg("--in").arg(&path).output().unwrap());
    assert_eq!(once, twice);
    assert!(once.contains("\"grid\""));
}

#[test]
fn gen_accepts_explicit_dims() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("d.onsf");
    orthoflow()
        .args(["gen", "--N", "3", "--eps", "0.5", "--allow-overlap", "--dims", "32,16,32", "--out"])
        .arg(&snap)
        .assert()
        .success();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    assert_eq!(report["dims"], serde_json::json!([32, 16, 32]));
    let out = orthoflow().args(["gen", "--N", "3", "--eps", "0.5", "--dims", "24,24", "--out"]).arg(&snap).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
