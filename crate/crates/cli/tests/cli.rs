use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flatyamabe"))
}

fn corpus(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).to_string_lossy().into_owned()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().arg("--output-dir").arg(dir).args(args).output().expect("binary runs");
    assert!(out.status.code().is_some(), "terminated by signal");
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sphere_spectrum_first_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectrum", "sphere", "--dim", "2", "--unit-volume", "--cutoff", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("spectrum.json"));
    assert_eq!(v["entries"][1]["eigenvalue_exact"], "8*pi");
    assert_eq!(v["entries"][1]["multiplicity"], 3);
}

#[test]
fn klein_quotient_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectrum", "quotient", "--group", &corpus("klein.json"), "--cutoff", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.lines().any(|l| l.ends_with(",4*pi^2,1")));
    assert!(csv.lines().any(|l| l == "0,0,1"));
}

#[test]
fn torus_spectrum_below_one_is_zero_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--format", "csv", "spectrum", "torus", "--basis", "identity2", "--cutoff", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("spectrum.csv")).unwrap(), "eigenvalue,eigenvalue_exact,multiplicity\n0,0,1\n");
    assert!(!dir.path().join("spectrum.json").exists());
}

#[test]
fn spectrum_goldens() {
    for n in ["torus1", "torus2", "torus3", "klein", "hantzsche_wendt"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(dir.path(), &["spectrum", "quotient", "--group", &corpus(&format!("{n}.json")), "--cutoff", "100"]);
        assert_eq!(out.status.code(), Some(0));
        for ext in ["csv", "json"] {
            let got = fs::read_to_string(dir.path().join(format!("spectrum.{ext}"))).unwrap();
            let want = fs::read_to_string(golden(&format!("spectrum_{n}.{ext}"))).unwrap();
            assert_eq!(got, want, "{n}.{ext}");
        }
    }
}

#[test]
fn spectrum_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["spectrum", "quotient", "--group", "hw", "--cutoff", "200"]);
    let text = fs::read_to_string(dir.path().join("spectrum.json")).unwrap();
    let parsed = flatyamabe::spectral::SpectrumSlice::from_json(&text).unwrap();
    assert_eq!(parsed.to_json() + "\n", text);
}

fn instants(dir: &Path) -> Vec<Value> {
    json(&dir.join("bifurcate.json"))["instants"].as_array().unwrap().clone()
}

#[test]
fn flagship_bifurcate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["bifurcate", "--scenario", &corpus("s2xt2.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let inst = instants(dir.path());
    assert_eq!(inst.len(), 4);
    for (k, i) in inst.iter().enumerate() {
        let t = 0.460_658_865_961_780_6 / (k + 1) as f64;
        assert!(i["t_lo"].as_f64().unwrap() <= t + 1e-15 && i["t_hi"].as_f64().unwrap() >= t - 1e-15);
        assert_eq!(i["jump"], 2);
        assert_eq!(i["condition_a"], true);
    }
    assert_eq!(fs::read_to_string(dir.path().join("bifurcate.json")).unwrap(), fs::read_to_string(golden("s2xt2_bifurcate.json")).unwrap());
    assert_eq!(fs::read_to_string(dir.path().join("bifurcate_grid.csv")).unwrap(), fs::read_to_string(golden("s2xt2_grid.csv")).unwrap());
}

#[test]
fn short_and_fixed_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["bifurcate", "--scenario", &corpus("s2xt2_short.toml")]);
    assert_eq!(instants(dir.path()).len(), 1);
    run(dir.path(), &["bifurcate", "--scenario", &corpus("s2xt2.toml"), "--t-min", "0.5", "--steps", "50"]);
    assert_eq!(instants(dir.path()).len(), 0);
    run(dir.path(), &["bifurcate", "--scenario", &corpus("s2xt2_fixed.toml")]);
    assert_eq!(instants(dir.path()).len(), 0);
}

#[test]
fn thread_count_does_not_change_output() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    run(one.path(), &["--threads", "1", "bifurcate", "--scenario", &corpus("s2xt2.toml")]);
    run(many.path(), &["--threads", "4", "bifurcate", "--scenario", &corpus("s2xt2.toml")]);
    for f in ["bifurcate.json", "bifurcate_grid.csv", "bifurcate_instants.csv"] {
        assert_eq!(fs::read(one.path().join(f)).unwrap(), fs::read(many.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn coarse_grid_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["bifurcate", "--scenario", &corpus("s2xt2.toml"), "--steps", "2", "--max-refinements", "0"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("more steps"));
}

#[test]
fn validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectrum", "quotient", "--group", &corpus("point_inversion.json"), "--cutoff", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["--precision-bits", "32", "spectrum", "torus", "--basis", "identity1", "--cutoff", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["bifurcate", "--scenario", &corpus("missing.toml")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn index_scan_points() {
    let dir = tempfile::tempdir().unwrap();
    for (t, want) in [("1", 1), ("1/5", 5), ("10", 9)] {
        let out = run(dir.path(), &["index-scan", "--scenario", &corpus("s2xt2.toml"), "--t", t]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json(&dir.path().join("index_scan.json"))["points"][0]["index"], want, "t = {t}");
    }
    run(dir.path(), &["--format", "csv", "index-scan", "--scenario", &corpus("s2xt2.toml"), "--steps", "9"]);
    let csv = fs::read_to_string(dir.path().join("index_scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn tower_crosses_at_level_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["tower", "--scenario", &corpus("s2xt2.toml"), "--degrees", "2,2,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("tower.json"));
    assert_eq!(v["ledger"]["first_crossing"], 3);
    assert_eq!(v["forcing"]["degree"], 7);
    assert_eq!(fs::read_to_string(dir.path().join("tower.json")).unwrap(), fs::read_to_string(golden("s2xt2_tower.json")).unwrap());
}

#[test]
fn checks_report_through_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["check", "torsion", "--group", &corpus("klein.json")]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["check", "torsion", "--group", &corpus("hantzsche_wendt.json")]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["check", "torsion", "--group", &corpus("point_inversion.json")]).status.code(), Some(1));
    assert_eq!(
        run(dir.path(), &["check", "cone", "--group", &corpus("klein.json"), "--matrix", &corpus("diag2_3.json")]).status.code(),
        Some(0)
    );
    fs::write(dir.path().join("shear.json"), r#"[["1","1"],["0","1"]]"#).unwrap();
    let shear = dir.path().join("shear.json").to_string_lossy().into_owned();
    assert_eq!(run(dir.path(), &["check", "cone", "--group", "klein", "--matrix", &shear]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["check", "cheng", "--basis", "identity2"]).status.code(), Some(0));
    assert_eq!(json(&dir.path().join("check_cheng.json"))["violations"], 0);
}

#[test]
fn collapse_reports_unimodular_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["collapse", "--group", &corpus("torus3.json"), "--basis", "1,0,0;0,1,0", "--t", "1/4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("collapse.json"));
    assert_eq!(v["det"], "1");
    assert_eq!(v["cone_membership"], true);
    assert_eq!(v["validation"]["valid"], true);
    let g = flatyamabe::crystal::CrystalGroup::from_file(&serde_json::from_value(v["conjugated_group"].clone()).unwrap()).unwrap();
    assert_eq!(g.lattice().covolume(), flatyamabe::exact::rational::int(1));
}
