use std::fs;
use std::process::{Command, Output};

fn orbitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitlab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_reports_the_fixed_point() {
    let o = orbitlab(&["solve", "--example", "ex_3_4", "--x0", "3/4"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: toml::Table = stdout(&o).parse().unwrap();
    let details = &doc["solve_0"]["details"];
    assert!((details["candidate"].as_float().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(doc["decay_0"]["verdict"].as_str(), Some("pass"));
}

#[test]
fn solve_writes_reports_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbitlab(&["solve", "--example", "ex_1_6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    for f in ["solve_0.toml", "solve_1.toml", "orbit_0.csv", "orbit_1.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("orbit_0.csv")).unwrap();
    assert!(csv.starts_with("n,x_n,Ax_n,applied_map,gap\n"));
    let report = fs::read_to_string(dir.path().join("solve_0.toml")).unwrap();
    assert!(report.contains("termination = \"oscillating\""));
}

#[test]
fn lambda_sweep_fails_with_a_witness() {
    let o = orbitlab(&[
        "sweep",
        "--example",
        "remark_3_2",
        "--form",
        "lambda-max",
        "--lambda",
        "0.99",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let doc: toml::Table = stdout(&o).parse().unwrap();
    let w = &doc["sweep"]["witness"];
    assert_eq!(w["x"].as_float(), Some(0.0));
    assert!(w["y"].as_float().unwrap() <= 1.0 / 0.99 - 1.0);
    assert_eq!(doc["sweep"]["details"]["zero_mode"].as_str(), Some("lenient"));
}

#[test]
fn zero_mode_flag_overrides_config() {
    let lenient = orbitlab(&["sweep", "--example", "ex_1_6"]);
    assert_eq!(lenient.status.code(), Some(0));
    let strict = orbitlab(&["sweep", "--example", "ex_1_6", "--zero-mode", "strict"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict).contains("status = \"zero_branch_violated\""));
}

#[test]
fn hypotheses_cover_both_pairs() {
    let o = orbitlab(&["hypotheses", "--example", "ex_3_3"]);
    let doc: toml::Table = stdout(&o).parse().unwrap();
    for key in [
        "weakly_commuting_S",
        "compatible_T_below_third",
        "compatible_type_a_S_below_third",
    ] {
        assert!(doc.contains_key(key), "{key}");
    }
    assert_eq!(doc["compatible_type_a_S_below_third"]["verdict"].as_str(), Some("fail"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seq_and_phi_check() {
    let o = orbitlab(&["seq", "--example", "ex_3_5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n0_max = 42"));
    let o = orbitlab(&["phi-check", "--example", "ex_3_4"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn corpus_verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let a = orbitlab(&["corpus-verify", "--jobs", "4", "--out", out]);
    let b = orbitlab(&["corpus-verify", "--jobs", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(dir.path().join("corpus_ex_3_7.toml").exists());
}

#[test]
fn exported_bundle_runs_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbitlab(&["export", "--example", "ex_3_6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("ex_3_6.toml");
    let o = orbitlab(&["corpus-verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "[space]\ndomain = \"(0,1]\"\n[maps]\nA = \"piece (0,1]: x\"\nS = \"piece (0,1]: 2*x\"\n",
    )
    .unwrap();
    let o = orbitlab(&["solve", "--config", path.to_str().unwrap(), "--x0", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml"));
    assert_eq!(
        orbitlab(&["solve", "--config", "/nonexistent.toml"]).status.code(),
        Some(2)
    );
    assert_eq!(orbitlab(&["solve", "--example", "ex_9_9"]).status.code(), Some(2));
    assert_eq!(
        orbitlab(&["sweep", "--example", "ex_3_4", "--zero-mode", "loose"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn runtime_errors_exit_3() {
    let o = orbitlab(&["solve", "--example", "ex_3_4", "--x0", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("build_orbit"));
}

#[test]
fn list_names_every_bundle() {
    let o = orbitlab(&["list"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("ex_1_6\t"));
}
