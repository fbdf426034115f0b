use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sturmian(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sturmian"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("STURMIAN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn spectrum_writes_sorted_disjoint_bands() {
    let dir = tempfile::tempdir().unwrap();
    let o = sturmian(&["spectrum", "--theta-cf-periodic", ":1", "--lambda", "2", "--level", "8"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("bands.json"));
    for key in ["level", "lambda", "bands", "total_measure", "C_estimate", "config", "version"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["theta"], "periodic::1");
    let bands: Vec<[f64; 2]> = serde_json::from_value(v["bands"].clone()).unwrap();
    assert_eq!(bands.len(), 34);
    for b in &bands {
        assert!(b[0] < b[1]);
    }
    for w in bands.windows(2) {
        assert!(w[0][1] < w[1][0]);
    }
    let total: f64 = bands.iter().map(|b| b[1] - b[0]).sum();
    assert!((total - v["total_measure"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["gordon", "--lambda", "2", "--level-range", "8..10", "--energies", "random-bands:8:3", "--seed", "5", "--angles", "4"];
    for d in [&a, &b] {
        let o = sturmian(&args, d.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &tempfile::TempDir| {
        let v = read_json(&d.path().join("gordon.json"));
        // the output directory is part of the embedded config
        let mut v = v;
        v["config"]["out"] = Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(read(&a), read(&b));
    let raw = std::fs::read_to_string(a.path().join("gordon.json")).unwrap();
    assert!(raw.contains("\"seed\": 5"));
}

#[test]
fn gordon_fibonacci_has_no_surviving_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = sturmian(
        &["gordon", "--theta-cf-periodic", ":1", "--lambda", "1", "--beta", "0", "--level-range", "8..14"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("gordon.json"));
    assert_eq!(v["surviving_violations"], 0);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 20);
    for r in reports {
        let ns: Vec<u64> = r["rows"].as_array().unwrap().iter().map(|x| x["n"].as_u64().unwrap()).collect();
        assert_eq!(ns, (8..=14).collect::<Vec<_>>());
    }
}

#[test]
fn free_alpha_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sturmian(&["alpha", "--theta-cf-periodic", ":1", "--lambda", "0", "--energies", "0.5"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("alpha.json"));
    let alpha = v["fits"][0]["alpha"].as_f64().unwrap();
    assert!((alpha - 1.0).abs() <= 0.05, "alpha = {alpha}");
}

#[test]
fn free_half_line_m_at_i() {
    let dir = tempfile::tempdir().unwrap();
    let o = sturmian(&["mfunction", "--lambda", "0", "--z", "0+1i", "--N", "200", "--side", "right"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("mfunction.json"));
    let m: [f64; 2] = serde_json::from_value(v["value"].clone()).unwrap();
    assert!(m[0].abs() < 1e-8);
    assert!((m[1] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-8);
}

#[test]
fn evolve_writes_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = sturmian(&["evolve", "--energy", "0.3", "--phi", "0.7", "--length", "50"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("evolve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,v,u,norm_U");
    assert_eq!(lines.len(), 52);
    let v = read_json(&dir.path().join("evolve.json"));
    let last: f64 = lines[51].rsplit(',').next().unwrap().parse().unwrap();
    let norm = v["norm_U"].as_f64().unwrap();
    assert!((last - norm).abs() <= 1e-12 * norm);
}

#[test]
fn words_with_partition() {
    let dir = tempfile::tempdir().unwrap();
    let o = sturmian(&["words", "--level", "4", "--window", "-20..40", "--partition"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("words.json"));
    assert_eq!(v["word"], "10110");
    assert_eq!(v["potential"].as_str().unwrap().len(), 61);
    assert!(v["partition"].is_object());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectrum", "--level", "4", "--tol", "0"],
        vec!["spectrum", "--level", "4", "--theta-cf", "1,2", "--theta-rational", "3/7"],
        vec!["mfunction", "--z", "0.5-0.1i"],
        vec!["spectrum"],
    ] {
        let o = sturmian(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn module_errors_exit_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let o = sturmian(&["words", "--level", "40"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let d: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(d["error"], "resource");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested");
    let o = Command::new(env!("CARGO_BIN_EXE_sturmian"))
        .args(["spectrum", "--level", "3", "--theta-rational", "5/8"])
        .env("STURMIAN_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&target.join("bands.json"));
    assert_eq!(v["config"]["theta"], "rational:5/8");
    assert_eq!(v["bands"].as_array().unwrap().len(), 3);
}
