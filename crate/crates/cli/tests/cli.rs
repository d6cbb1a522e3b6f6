use std::process::Command;

fn pepdg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pepdg"))
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = pepdg()
        .args(["run", "--case", "gaussian", "--scheme", "P3", "--N", "10", "--periods", "0.05", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["scheme"], "P3");
    let csv = std::fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert!(csv.starts_with("t,step,pressure_error_pct,global_energy,conservation_error_pct"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "case = \"mms\"\nscheme = \"P1\"\np = 1\nN = 4\nperiods = 0.02\n").unwrap();
    let out = pepdg().args(["run", "--config"]).arg(&cfg).args(["--N", "6"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["N"], 6);
    assert_eq!(v["case"], "mms");
}

#[test]
fn grid_sweep_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = pepdg()
        .args(["sweep", "--case", "mms", "--scheme", "P1", "--p", "2", "--periods", "0.1", "--axis", "grid", "--values", "8,16"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rates:"), "{stdout}");
    assert!(dir.path().join("sweep.csv").exists());
    assert!(dir.path().join("sweep.json").exists());
}

#[test]
fn check_passes_on_builtin_data() {
    let out = pepdg().args(["check", "--samples", "50", "--seed", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn bad_input_exits_with_one() {
    let out = pepdg().args(["run", "--case", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = pepdg().args(["run", "--case", "gaussian", "--p", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "case = \"gaussian\"\nbogus = 1\n").unwrap();
    let out = pepdg().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
