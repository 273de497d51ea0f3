use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gallop-sim"))
}

fn scenario(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(file)
}

#[test]
fn run_writes_outputs_and_plot_data_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(scenario("leader_follower_l.json"))
        .arg("--out")
        .arg(dir.path())
        .args(["--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trace.csv", "metrics.json", "cycle_cdf.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["seed"], 3);

    for (metric, header) in [
        ("cycle-cdf", "latency_us,fraction"),
        ("path", "node,time_us,x,y"),
        ("gap", "time_us,gap_m"),
    ] {
        let out = bin()
            .arg("plot-data")
            .arg(dir.path().join("trace.csv"))
            .args(["--metric", metric])
            .output()
            .unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next(), Some(header));
        assert!(text.lines().count() > 1, "{metric}");
    }
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"kind":"remote-control","seed":1,
            "nodes":[{"id":0,"role":"controller"},{"id":1,"role":"robot","path":[{"x":1,"y":0}]}],
            "channel":{"default_per":0.0,"links":[{"from":0,"to":7,"per":0.1}]}}"#,
    )
    .unwrap();
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown node"));
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"{"per":[0.0,0.3],"seeds":[1,2]}"#).unwrap();
    let out = bin()
        .arg("sweep")
        .arg(scenario("remote_control_square.json"))
        .arg("--grid")
        .arg(&grid)
        .arg("--out")
        .arg(dir.path().join("s"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
}
