use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn safemon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safemon"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

/// Data rows of a CSV artifact, without comment lines.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&safemon(&["--no-such-flag", "calibrate"])), 1);
    assert_eq!(code(&safemon(&[])), 1);
    assert_eq!(code(&safemon(&["--jobs", "0", "show-config"])), 1);
    assert_eq!(code(&safemon(&["--help"])), 0);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[tank]\nsensor_sigma = -1.0\n").unwrap();
    let out = safemon(&["--config", cfg.to_str().unwrap(), "show-config"]);
    assert_eq!(code(&out), 2);
    std::fs::write(&cfg, "[tank]\nno_such_key = 1\n").unwrap();
    assert_eq!(code(&safemon(&["--config", cfg.to_str().unwrap(), "show-config"])), 2);
}

#[test]
fn missing_artifacts_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = safemon(&["--out", dir.path().to_str().unwrap(), "report"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn show_config_round_trips() {
    let out = safemon(&["--seed", "7", "--horizon", "4", "show-config"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 7"));
    assert!(text.contains("horizon = 4"));
}

#[test]
fn export_prism_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = safemon(&[
        "--horizon",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
        "export-prism",
        "--pa",
        fixture("gamble.pa").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let read = |p: PathBuf| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(dir.path().join("model.prism")), read(fixture("gamble.prism")));
    assert_eq!(read(dir.path().join("model.props")), read(fixture("gamble.props")));
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |extra: &[&str]| {
        let mut args = vec!["--trials", "25", "--out", d.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = safemon(&args);
        assert_eq!(code(&out), 0, "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["calibrate"]);
    run(&["check"]);

    run(&["--jobs", "1", "campaign"]);
    let single: Vec<Vec<u8>> = ["summary.csv", "summary.json", "traces.csv"]
        .iter()
        .map(|f| std::fs::read(d.join(f)).unwrap())
        .collect();
    run(&["--jobs", "3", "campaign"]);
    for (f, bytes) in ["summary.csv", "summary.json", "traces.csv"].iter().zip(&single) {
        assert_eq!(&std::fs::read(d.join(f)).unwrap(), bytes, "{f} depends on --jobs");
    }

    let summary = std::fs::read_to_string(d.join("summary.csv")).unwrap();
    assert!(summary.starts_with("# safemon "));
    assert!(summary.contains("config_hash="));

    let replay = d.join("replayed.csv");
    run(&[
        "monitor",
        "--table",
        d.join("safety_table.csv").to_str().unwrap(),
        "--trace",
        d.join("traces.csv").to_str().unwrap(),
        "--output",
        replay.to_str().unwrap(),
    ]);
    let (orig, again) = (rows(&d.join("traces.csv")), rows(&replay));
    assert_eq!(orig.len(), again.len());
    let col = |h: &[String], name: &str| h.iter().position(|c| c == name).unwrap();
    for name in ["monitor_point", "monitor_distribution", "monitor_true"] {
        let (a, b) = (col(&orig[0], name), col(&again[0], name));
        for (x, y) in orig.iter().zip(&again).skip(1) {
            assert_eq!(x[a], y[b], "{name}");
        }
    }

    let report = run(&["report"]);
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.contains("distribution"));
}
