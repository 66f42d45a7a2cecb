use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn finsler(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn value(r: &Value, key: &str) -> f64 {
    r["quantities"][key]["value"].as_f64().unwrap_or_else(|| panic!("missing {key}"))
}

#[test]
fn malformed_config_exits_2_without_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"bad\"\nmetric.family = \"kite\"\n").unwrap();
    let out = dir.path().join("out");
    let o = finsler(&["verify", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("bad.json").exists());
}

#[test]
fn riemannian_circle_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenarios().join("riemannian-circle.toml");
    let o = finsler(&["verify", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path(), "riemannian-circle");
    assert!((value(&r, "lambda1") - 1.0).abs() < 0.02);
    assert!((value(&r, "h_exact") - 2.0 / PI).abs() < 0.02);
    assert!(r["inequalities"].as_array().unwrap().iter().all(|i| i["satisfied"] == true));
}

#[test]
fn randers_torus_satisfies_the_sandwich() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenarios().join("randers-torus-b03.toml");
    let o = finsler(&["verify", path.to_str().unwrap(), "--resolution", "32"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path(), "randers-torus-b03");
    let sandwich: Vec<&Value> = r["inequalities"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|i| i["name"].as_str().unwrap().starts_with("randers-sandwich"))
        .collect();
    assert_eq!(sandwich.len(), 2);
    assert!(sandwich.iter().all(|i| i["satisfied"] == true));
}

#[test]
fn reports_are_byte_identical_and_csv_has_one_row_per_node() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let path = scenarios().join("flat-torus.toml");
    let args = ["eigen", path.to_str().unwrap(), "--resolution", "16"];
    assert_eq!(finsler(&args, a.path()).status.code(), Some(0));
    assert_eq!(finsler(&args, b.path()).status.code(), Some(0));
    let ja = std::fs::read(a.path().join("flat-torus.json")).unwrap();
    let jb = std::fs::read(b.path().join("flat-torus.json")).unwrap();
    assert_eq!(ja, jb);
    let csv = std::fs::read_to_string(a.path().join("flat-torus.eigenfunction.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16 * 16 + 1);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenarios().join("riemannian-circle.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(["cheeger", path.to_str().unwrap(), "--resolution", "64"])
        .env("FINSLER_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("riemannian-circle.json").exists());
}

#[test]
fn csv_format_writes_a_summary_instead_of_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenarios().join("riemannian-circle.toml");
    let o = finsler(&["eigen", path.to_str().unwrap(), "--resolution", "64", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(!dir.path().join("riemannian-circle.json").exists());
    assert!(dir.path().join("riemannian-circle.csv").exists());
}
