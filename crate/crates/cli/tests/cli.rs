//! End-to-end checks of the command-line interface: artifact schemas,
//! exit codes, determinism.

use std::path::Path;
use std::process::Command;

use frustration_lab::lattice::Lattice;
use frustration_lab::modules::{spec_to_json, square_spec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frustration-lab"))
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lattice_command_writes_loadable_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lat.json");
    let status = bin()
        .args(["lattice", "--kind", "square", "--rows", "5", "--cols", "5"])
        .args(["--boundary", "free", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let lattice = Lattice::from_json(&read_json(&out)).unwrap();
    assert_eq!(lattice.n_sites(), 25);
    assert_eq!(lattice.n_bonds(), 40);

    let torus = dir.path().join("torus.json");
    let status = bin()
        .args(["lattice", "--kind", "square", "--rows", "3", "--cols", "3"])
        .args(["--boundary", "toroidal", "--out"])
        .arg(&torus)
        .status()
        .unwrap();
    assert!(status.success());
    let lattice = Lattice::from_json(&read_json(&torus)).unwrap();
    assert_eq!(lattice.n_bonds(), 18);
    assert_eq!(lattice.plaquettes().len(), 9);
}

#[test]
fn invalid_dimensions_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.json");
    let output = bin()
        .args(["lattice", "--kind", "square", "--rows", "2", "--cols", "3"])
        .args(["--boundary", "toroidal", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
    assert!(!out.exists(), "failed runs must not leave artifacts");
}

#[test]
fn solve_ferromagnet_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let lat = dir.path().join("lat.json");
    bin()
        .args(["lattice", "--kind", "square", "--rows", "4", "--cols", "4"])
        .args(["--boundary", "free", "--out"])
        .arg(&lat)
        .status()
        .unwrap();

    // All-positive couplings via p = 0.
    let out = dir.path().join("sol.json");
    let status = bin()
        .args(["solve", "--lattice"])
        .arg(&lat)
        .args(["--p", "0", "--self-check", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let json = read_json(&out);
    assert_eq!(json["degeneracy"], "2");
    assert_eq!(json["energy"], -24);
    assert!(json.get("elapsed_ms").is_none(), "timings are opt-in");

    // Missing input: exit 2.
    let missing = bin()
        .args(["solve", "--lattice", "/nonexistent.json", "--p", "0.5"])
        .args(["--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    // Backend cap: exhaustive on 36 sites is refused with exit 3.
    let big = dir.path().join("big.json");
    bin()
        .args(["lattice", "--kind", "square", "--rows", "6", "--cols", "6"])
        .args(["--boundary", "free", "--out"])
        .arg(&big)
        .status()
        .unwrap();
    let capped = bin()
        .args(["solve", "--lattice"])
        .arg(&big)
        .args(["--p", "0.5", "--backend", "exhaustive", "--out"])
        .arg(dir.path().join("y.json"))
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(3));
}

#[test]
fn identical_configs_reproduce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let lat = dir.path().join("lat.json");
    bin()
        .args(["lattice", "--kind", "triangular", "--rows", "4", "--cols", "5"])
        .args(["--boundary", "cylindrical", "--out"])
        .arg(&lat)
        .status()
        .unwrap();
    let run = |out: &Path, threads: &str| {
        let status = bin()
            .args(["solve", "--threads", threads, "--lattice"])
            .arg(&lat)
            .args(["--p", "0.5", "--seed", "11", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    run(&a, "1");
    run(&b, "2");
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "output must not depend on the run or the thread count"
    );
}

#[test]
fn verify_module_reports_corrupted_specs_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    let corrupted = square_spec().with_all_unfrustrated();
    std::fs::write(
        &spec_path,
        serde_json::to_string_pretty(&spec_to_json(&corrupted)).unwrap(),
    )
    .unwrap();

    let out = dir.path().join("verify.json");
    let status = bin()
        .args(["verify-module", "--spec-file"])
        .arg(&spec_path)
        .args(["--samples", "6", "--seed", "1234", "--collar", "3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    // A failed verdict is a result, not an error.
    assert!(status.success());
    let json = read_json(&out);
    assert_eq!(json["all_pass"], false);
}

#[test]
fn bound_csv_has_the_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bound.json");
    let csv = dir.path().join("bound.csv");
    let status = bin()
        .args(["bound", "--spec", "square", "--out"])
        .arg(&out)
        .args(["--csv"])
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "spec,p,p_s,p_b,k,q,epsilon,delta,exponent,density,method,samples,stderr"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("square,0.5,1,1,"));
    assert!(row.contains("closed_form"));

    let json = read_json(&out);
    assert_eq!(json["density_constant_exact"], "1/204800");
    assert_eq!(json["q_exact"], "1/8192");
}

#[test]
fn density_command_emits_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("density.json");
    let status = bin()
        .args(["density", "--spec", "square", "--p", "0.5"])
        .args(["--samples", "200000", "--seed", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let json = read_json(&out);
    assert_eq!(json["samples"], 200000);
    assert!(json["estimate"].as_f64().unwrap() >= 0.0);
    assert!(json["stderr"].as_f64().unwrap() > 0.0);
}
