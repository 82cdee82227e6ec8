use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sam-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn sam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sam")).args(args).output().expect("binary runs")
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn simulate_writes_header_and_repeatable_rows() {
    let a = scratch("sim-a");
    let b = scratch("sim-b");
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = sam(&["simulate", "--seed", "5", "--threads", threads, "--set", "n=10", "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(a.join("dataset.csv")).unwrap();
    assert!(text.starts_with("# sam "));
    assert!(text.contains("# seed: 5"));
    assert!(text.contains("# config: n = 10"));
    let rows = data_rows(&a.join("dataset.csv"));
    assert_eq!(rows[0], "time,value");
    assert_eq!(rows.len(), 12);
    assert_eq!(rows, data_rows(&b.join("dataset.csv")));
}

#[test]
fn estimate_on_brownian_data() {
    let dir = scratch("est");
    let data = dir.join("bm.csv");
    std::fs::write(&data, "time,value\n0,0\n1,0.3\n").unwrap();
    let cfg = dir.join("run.ini");
    std::fs::write(&cfg, format!("# one interval\nmodel = bm-drift\nbox = -2,2\nstart = -1\ndata = {}\nladder = 2,4\neps_floor = 1e-10\neps_scale = 1e-10\n", data.display()))
        .unwrap();
    let out = sam(&["estimate", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.join("estimate.csv"));
    assert_eq!(rows.len(), 3, "{rows:?}");
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = header.iter().position(|c| *c == "theta0").expect("theta0 column");
    for r in &rows[1..] {
        let v: f64 = r.split(',').nth(col).unwrap().parse().unwrap();
        assert!((v - 0.3).abs() < 1e-8, "{r}");
    }
    assert!(dir.join("trace.csv").exists() && dir.join("result.txt").exists());
}

#[test]
fn validate_reports_each_check() {
    let dir = scratch("val");
    let out = sam(&[
        "validate",
        "--set",
        "checks=zero-variance,min-identity,poisson-load",
        "--set",
        "scale=quick",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.join("validate.csv"));
    assert_eq!(rows.len(), 4, "{rows:?}");
    assert!(rows[1..].iter().all(|r| r.contains("true")), "{rows:?}");
}

#[test]
fn bad_input_exits_with_usage_error() {
    let dir = scratch("bad");
    let out = sam(&["simulate", "--set", "colour=blue", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    let out = sam(&["estimate", "--set", "data=/nonexistent/series.csv", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = sam(&["validate", "--set", "checks=no-such-check", "--out", dir.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn overrides_beat_the_file() {
    let dir = scratch("ovr");
    let cfg = dir.join("run.ini");
    std::fs::write(&cfg, "n = 30\nseed = 9\n").unwrap();
    let out = sam(&["simulate", "--config", cfg.to_str().unwrap(), "--set", "n=4", "--seed", "2", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("dataset.csv")).unwrap();
    assert!(text.contains("# seed: 2"));
    assert_eq!(data_rows(&dir.join("dataset.csv")).len(), 6);
}
