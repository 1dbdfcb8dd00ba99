use std::path::Path;
use std::process::{Command, Output};

fn cellx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellx"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn adder(dir: &Path, width: usize) -> String {
    let name = format!("adder{width}.json");
    let o = cellx(&["adder", "--width", &width.to_string(), "--out", &name], dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    name
}

fn report(dir: &Path, out: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(out).join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn extend_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let net = adder(tmp.path(), 4);
    let o = cellx(
        &["extend", "--netlist", &net, "--max-cells", "5", "--max-size", "5", "--max-inputs", "3", "--out", "o", "--dot"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "report.json",
        "report.csv",
        "extended_library.json",
        "netlist_extended.json",
        "patterns.json",
        "saturation.json",
        "egraph.json",
        "pattern_graph.dot",
    ] {
        assert!(tmp.path().join("o").join(f).exists(), "{f}");
    }
    let r = report(tmp.path(), "o");
    assert!(r["reduction_pct"].as_f64().unwrap() > 0.0);
    assert!(r["cells"].as_array().unwrap().len() <= 5);
    let csv = std::fs::read_to_string(tmp.path().join("o/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn missing_library_exits_2_naming_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let net = adder(tmp.path(), 2);
    let o = cellx(&["extend", "--netlist", &net, "--lib", "missing.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--lib"));
    let o = cellx(&["extend", "--netlist", "nothing.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--netlist"));
}

#[test]
fn zero_budget_reports_no_change() {
    let tmp = tempfile::tempdir().unwrap();
    let net = adder(tmp.path(), 4);
    let o = cellx(&["extend", "--netlist", &net, "--max-cells", "0", "--out", "o"], tmp.path());
    assert!(o.status.success());
    let r = report(tmp.path(), "o");
    assert_eq!(r["cells"].as_array().unwrap().len(), 0);
    assert_eq!(r["reduction_pct"].as_f64(), Some(0.0));
    let csv = std::fs::read_to_string(tmp.path().join("o/report.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",0.00,"));
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let net = adder(tmp.path(), 4);
    for out in ["a", "b"] {
        let o = cellx(&["extend", "--netlist", &net, "--seed", "7", "--out", out], tmp.path());
        assert!(o.status.success());
    }
    for f in ["report.json", "report.csv", "extended_library.json", "netlist_extended.json", "patterns.json"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn stages_reload_saved_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let net = adder(tmp.path(), 4);
    let o = cellx(&["saturate", "--netlist", &net, "--out", "s"], tmp.path());
    assert!(o.status.success());
    let o = cellx(&["mine", "--egraph", "s/egraph.json", "--out", "m"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o2 = cellx(&["mine", "--netlist", &net, "--out", "m2"], tmp.path());
    assert!(o2.status.success());
    let a = std::fs::read(tmp.path().join("m/patterns.json")).unwrap();
    let b = std::fs::read(tmp.path().join("m2/patterns.json")).unwrap();
    assert!(a == b, "patterns from the snapshot differ from a fresh run");
    assert_eq!(o.stdout, o2.stdout);

    let o = cellx(&["extend", "--netlist", &net, "--out", "x"], tmp.path());
    assert!(o.status.success());
    let o = cellx(
        &[
            "report",
            "--netlist",
            &net,
            "--extended-netlist",
            "x/netlist_extended.json",
            "--extended-lib",
            "x/extended_library.json",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reduction_pct"], report(tmp.path(), "x")["reduction_pct"]);
}

#[test]
fn config_file_and_bad_params() {
    let tmp = tempfile::tempdir().unwrap();
    let net = adder(tmp.path(), 2);
    std::fs::write(tmp.path().join("c.json"), r#"{"max_cells": 0}"#).unwrap();
    let o = cellx(&["extend", "--netlist", &net, "--config", "c.json", "--out", "o"], tmp.path());
    assert!(o.status.success());
    assert_eq!(report(tmp.path(), "o")["max_cells"], 0);
    let o = cellx(&["extend", "--netlist", &net, "--max-size", "0"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(tmp.path().join("bad.json"), r#"{"colour": 1}"#).unwrap();
    let o = cellx(&["extend", "--netlist", &net, "--config", "bad.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
