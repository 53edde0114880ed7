use std::fs;
use std::process::Command;

use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scare-radi"))
}

#[test]
fn solve_writes_trace_and_summary() {
    let dir = tempdir().unwrap();
    let out = bin()
        .args(["solve", "--generate", "heat:n=100,m=2,l=2,scale=1e-4,react=1", "--r", "2", "--noise", "1e-3", "--shift", "proj", "--window", "2"])
        .args(["--mode", "per-iter", "--seed", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("proj c 2"));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("iter,gamma,nres,cols_C,cols_Xi,nu_omega,t_shift,t_solve,t_ltimes,t_svd,t_other\n"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["r"], 2);
    assert_eq!(json["summary"]["converged"], true);
    assert_eq!(json["options"]["shift"]["mode"], "per_iteration");
}

#[test]
fn grid_reads_a_config_file() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    let out_dir = dir.path().join("out");
    let text = serde_json::json!({
        "problem": { "generate": "heat:n=60,m=2,l=1" },
        "r": [1],
        "variants": ["hami 1", "proj 5"],
        "output_dir": out_dir,
    });
    fs::write(&cfg, text.to_string()).unwrap();
    let out = bin().args(["grid", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("r1").join("proj_5.csv").is_file());
    assert!(out_dir.join("summary.json").is_file());
}

#[test]
fn bad_input_fails_cleanly() {
    let out = bin().args(["solve", "--generate", "heat:n=50,m=1,l=1", "--r", "3", "--noise", "1e-3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise scales"));
    let out = bin().args(["solve", "--problem", "/nonexistent/dir"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_runs_selected_criteria() {
    let out = bin().args(["validate", "--only", "1,7"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}
