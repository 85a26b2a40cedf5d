use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn driftlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .args(args)
        .env_remove("DRIFTLAB_OUT")
        .output()
        .unwrap()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn error_kind(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value =
        serde_json::from_str(line.trim()).unwrap_or_else(|e| panic!("{e}: {line}"));
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_string()
}

const TINY: &str = r#"
experiment_name = "tiny"
master_seed = 1

[[cohorts]]
group = "G2"
topic = "flatearth"
stances = ["support"]
users = 1
days = 1
"#;

#[test]
fn help_and_version_succeed() {
    assert!(driftlab(&["--help"]).status.success());
    assert!(driftlab(&["--version"]).status.success());
}

#[test]
fn usage_errors_are_validation_errors() {
    let out = driftlab(&["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "validation");
}

#[test]
fn missing_config_is_an_io_error() {
    let out = driftlab(&["simulate", "-c", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_kind(&out), "io");
}

#[test]
fn zero_user_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "experiment_name = \"none\"\nmaster_seed = 1\n").unwrap();
    let out = driftlab(&[
        "simulate",
        "-c",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "validation");
}

#[test]
fn simulate_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, TINY).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .args(["simulate", "-c", cfg.to_str().unwrap(), "--workers", "2"])
        .env("DRIFTLAB_OUT", tmp.path().join("env"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("env/tiny");
    let logs = fs::read_dir(&dir).unwrap().filter(|e| {
        e.as_ref()
            .unwrap()
            .path()
            .extension()
            .is_some_and(|x| x == "log")
    });
    assert_eq!(logs.count(), 1);

    let ok = driftlab(&[
        "analyze",
        "-e",
        dir.to_str().unwrap(),
        "--cohort",
        "topic=flatearth",
    ]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    for m in [
        "preference_aligned",
        "polarisation_topic",
        "polarisation_stance",
    ] {
        assert!(dir.join(format!("report/flatearth_{m}.csv")).exists());
        assert!(dir.join(format!("report/flatearth_{m}.svg")).exists());
    }

    let empty = driftlab(&[
        "analyze",
        "-e",
        dir.to_str().unwrap(),
        "--cohort",
        "group=G3",
    ]);
    assert_eq!(empty.status.code(), Some(2));
    let bad = driftlab(&[
        "analyze",
        "-e",
        dir.to_str().unwrap(),
        "--cohort",
        "group=G9",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = driftlab(&["analyze", "-e", tmp.path().join("nope").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn eval_predictor_reports_accuracy_and_checks_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let pred = tmp.path().join("p.toml");
    fs::write(
        &pred,
        "kind = \"oracle\"\ntopic_error_rate = 0.0\nstance_error_rate = 0.0\n",
    )
    .unwrap();
    let fixture = repo_root().join("fixtures/eval_350.jsonl");
    let out = driftlab(&[
        "eval-predictor",
        "-f",
        fixture.to_str().unwrap(),
        "-p",
        pred.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(
        table
            .lines()
            .any(|l| l.starts_with("pooled") && l.matches("100.0%").count() == 2),
        "{table}"
    );

    let short = tmp.path().join("short.jsonl");
    let text = fs::read_to_string(&fixture).unwrap();
    fs::write(&short, text.lines().skip(1).collect::<Vec<_>>().join("\n")).unwrap();
    let out = driftlab(&[
        "eval-predictor",
        "-f",
        short.to_str().unwrap(),
        "-p",
        pred.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn make_eval_fixture_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("f.jsonl");
    assert!(
        driftlab(&["make-eval-fixture", "-o", out.to_str().unwrap()])
            .status
            .success()
    );
    assert_eq!(
        fs::read(&out).unwrap(),
        fs::read(repo_root().join("fixtures/eval_350.jsonl")).unwrap()
    );
}

#[test]
fn empty_replay_fixture_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("r.toml");
    fs::write(&f, "name = \"r\"\ntopic = \"flatearth\"\nn_bins = 2\n[totals]\ninterest = 0\nneutral = 0\nother = 0\n").unwrap();
    let out = driftlab(&[
        "replay",
        "-f",
        f.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "validation");
}
