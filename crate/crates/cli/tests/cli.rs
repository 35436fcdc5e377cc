use std::path::PathBuf;
use std::process::Command;

fn agrisc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_agrisc"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

#[test]
fn bad_flags_exit_with_usage_code() {
    let out = agrisc().args(["run", "--mode", "sideways"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = agrisc().args(["run", "--compare"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--compare"));
    let out = agrisc().args(["run", "--loss-frac", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn micro_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("model.lp");
    let out = agrisc()
        .args(["run", "--mode", "perspective", "--mode", "plain-cut", "--compare", "--time-limit", "60"])
        .arg("--instance")
        .arg(data("micro_variance_bound.toml"))
        .arg("--out")
        .arg(dir.path())
        .args(["--export", "lp"])
        .arg(&lp)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("verdict: pass"));
    assert!(report.contains("[comparison]"));
    assert!(report.contains("[census]"));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let cuts = std::fs::read_to_string(dir.path().join("cuts.log")).unwrap();
    assert!(cuts.lines().count() >= 2);
    assert!(std::fs::read_to_string(&lp).unwrap().contains("^2"));
}

#[test]
fn infeasible_instance_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = agrisc()
        .args(["run", "--time-limit", "60"])
        .arg("--instance")
        .arg(data("micro_forced_loss.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("infeasible"));
}
