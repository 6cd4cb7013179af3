use std::process::Command;

fn cli() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pathfollow"));
    c.env("RUST_LOG", "warn");
    c
}

#[test]
fn verify_passes() {
    let out = cli().arg("verify").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn metrics_prints_default_glide_ratio() {
    let out = cli().arg("metrics").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("6.474"));
}

#[test]
fn metrics_reads_params_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("p.toml");
    std::fs::write(&f, "mass_kg = 2.0\nc0_kg_per_m = 0.005\nc1_kg_per_m = 0.05\n").unwrap();
    let out = cli().args(["metrics", "--params"]).arg(&f).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_builtin_writes_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["run", "--scenario", "straight_line_trim", "--duration", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("straight_line_trim/log.csv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("steady_max_y_m"));
}

#[test]
fn batch_runs_glob() {
    let dir = tempfile::tempdir().unwrap();
    let glob = format!("{}/scenarios/straight*.toml", env!("CARGO_MANIFEST_DIR"));
    let out = cli().args(["batch", "--scenarios", &glob, "--parallel", "2", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok"));
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.toml");
    std::fs::write(&f, "version = 1\nname = \"x\"\n").unwrap();
    let out = cli().args(["run", "--scenario"]).arg(&f).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = cli().args(["batch", "--scenarios", "/nonexistent/*.toml"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn list_names_builtins() {
    let out = cli().arg("list").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("racetrack_mission") && text.contains("noisy_racetrack"));
}
