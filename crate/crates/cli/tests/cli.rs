use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_broadcast"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> (Output, Value) {
    let out = bin().args(args).output().expect("spawn broadcast");
    let json = if out.stdout.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
    };
    (out, json)
}

fn chsh_file(dir: &Path, alpha: f64) -> PathBuf {
    let p = dir.join(format!("chsh_{alpha}.scn"));
    std::fs::write(
        &p,
        format!(
            "[scenario]\ninputs = 2, 2\n[state]\nkind = isotropic\nalpha = {alpha}\n\
             [measurements]\nbuiltin = chsh\n[model]\npreset = local\n[inequality]\nname = chsh\n"
        ),
    )
    .unwrap();
    p
}

#[test]
fn vertices_of_chsh_scenario() {
    let (out, j) = run(&["vertices", "--inputs", "2,2"]);
    assert!(out.status.success());
    assert_eq!(j["command"], "vertices");
    assert_eq!(j["results"]["vertices"], 24);
    assert_eq!(j["results"]["local"], 16);
    assert_eq!(j["inputs_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn local_kind_counts_deterministic_points() {
    let (out, j) = run(&["vertices", "--inputs", "2,3", "--kind", "local"]);
    assert!(out.status.success());
    assert_eq!(j["results"]["vertices"], 32);
}

#[test]
fn evaluate_reports_violation() {
    let dir = tempfile::tempdir().unwrap();
    let f = chsh_file(dir.path(), 1.0);
    let (out, j) = run(&["evaluate", "--scenario", f.to_str().unwrap()]);
    assert!(out.status.success());
    let v = j["results"]["inequalities"][0]["value"].as_f64().unwrap();
    assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(j["results"]["inequalities"][0]["violated"], true);
}

#[test]
fn membership_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sep = dir.path().join("sep.json");
    let f = chsh_file(dir.path(), 1.0);
    let (out, j) = run(&["membership", "--scenario", f.to_str().unwrap(), "--out", sep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(j["results"]["feasible"], false);
    assert!(sep.exists());

    let f = chsh_file(dir.path(), 0.5);
    let (out, j) = run(&["membership", "--scenario", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(j["results"]["feasible"], true);
}

#[test]
fn visibility_of_bundled_scenarios() {
    let (out, j) = run(&["visibility", "--scenario", scenarios().join("chsh.scn").to_str().unwrap()]);
    assert!(out.status.success());
    let v = j["results"]["v_star"].as_f64().unwrap();
    assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7, "{v}");

    let i3 = scenarios().join("i3_isotropic.scn");
    let (out, j) = run(&["visibility", "--scenario", i3.to_str().unwrap(), "--exact", "--formulation", "hybrid"]);
    assert!(out.status.success());
    let v = j["results"]["v_star"].as_f64().unwrap();
    assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-7, "{v}");
    assert_eq!(j["results"]["exact_confirmed"], true);
}

#[test]
fn reproduce_isotropic_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("iso.csv");
    let (out, j) = run(&["reproduce", "isotropic", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let r = &j["results"];
    let s3 = 1.0 / 3f64.sqrt();
    assert!((r["i3_slope"].as_f64().unwrap() - 4.0 * 3f64.sqrt()).abs() < 1e-9);
    assert!((r["v_star_i3_lp"].as_f64().unwrap() - s3).abs() < 1e-7);
    assert!((r["v_star_i4_lp"].as_f64().unwrap() - s3).abs() < 1e-7);
    assert!((r["mabk_threshold"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("quantity,value\n"));
}

#[test]
fn reproduce_fig2_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig2.csv");
    let (out, j) = run(&["reproduce", "fig2", "--steps", "2", "--seed", "5", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(j["seed"], 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed = 5"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,v_broadcast,v_chsh");
    assert_eq!(lines.len(), 3);
    let last: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - 1.0 / 3f64.sqrt()).abs() < 2e-3);
    assert!((last[2] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
}

#[test]
fn seesaw_is_reproducible_for_a_seed() {
    let i3 = scenarios().join("i3_isotropic.scn");
    let args = ["seesaw", "--scenario", i3.to_str().unwrap(), "--restarts", "4", "--seed", "11"];
    let (a, ja) = run(&args);
    let (_, jb) = run(&args);
    assert!(a.status.success());
    assert_eq!(ja["results"]["best_value"], jb["results"]["best_value"]);
    assert_eq!(ja["inputs_digest"], jb["inputs_digest"]);
}

#[test]
fn errors_go_to_stderr_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.scn");
    std::fs::write(&p, "[scenario]\ninputs = 2, 2\n[bogus]\n").unwrap();
    let (out, j) = run(&["evaluate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(j, Value::Null);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}
