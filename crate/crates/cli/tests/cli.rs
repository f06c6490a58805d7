use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[trainer]
kind = "weighted"
fitter = { kind = "gbdt", params = { num_rounds = 8, max_depth = 3 } }

[catalytic]
m_synth = 500
prior = { kind = "mlr", recipe = { kind = "linear", features = ["yardline_100", "posteam_spread"] } }
target = { kind = "gbdt", params = { num_rounds = 8, max_depth = 3 } }

[bootstrap]
b = 4

[eval]
m_test = 3
"#;

fn drive_ep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drive-ep"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("DRIVE_EP_SEED")
        .env_remove("DRIVE_EP_OUT")
        .env_remove("DRIVE_EP_CONFIG")
        .env_remove("DRIVE_EP_THREADS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = drive_ep(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Simulated league split into sim/train.csv and sim/test.csv, plus cfg.toml.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), CONFIG).unwrap();
    ok(
        dir.path(),
        &["simulate", "--n-drives", "160", "--test-fraction", "0.25", "--seed", "5", "--out", "sim"],
    );
    dir
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let s = String::from_utf8_lossy(&out.stderr).trim_end().to_string();
    assert_eq!(s.lines().count(), 1, "{s}");
    s
}

#[test]
fn evaluate_writes_metric_rows() {
    let ws = workspace();
    let d = ws.path();
    ok(d, &["train", "--config", "cfg.toml", "--train", "sim/train.csv", "--out", "tr"]);
    ok(d, &["bootstrap", "--config", "cfg.toml", "--train", "sim/train.csv", "--out", "bt"]);
    ok(
        d,
        &[
            "evaluate", "--config", "cfg.toml", "--model", "tr/model.json", "--test", "sim/test.csv", "--ensemble",
            "bt/ensemble", "--out", "ev",
        ],
    );
    let metrics = read(d, "ev/metrics.csv");
    let names: Vec<&str> = metrics.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(metrics.lines().next().unwrap(), "metric,value,se,M_test");
    assert_eq!(names, ["rmse", "logloss", "coverage", "bootcovg"]);
    let manifest: serde_json::Value = serde_json::from_str(&read(d, "ev/manifest.json")).unwrap();
    assert_eq!(manifest["command"], "evaluate");
    assert_eq!(manifest["inputs"]["test"]["drives"], 40);
    assert!(d.join("ev/config.toml").exists());
}

#[test]
fn catalytic_phi_zero_matches_train() {
    let ws = workspace();
    let d = ws.path();
    let common = ["--config", "cfg.toml", "--train", "sim/train.csv", "--test", "sim/test.csv", "--seed", "11"];
    ok(d, &[&["train"], &common[..], &["--out", "tr"]].concat());
    // The weighted trainer fits the same gbdt the catalytic target uses.
    ok(d, &[&["catalytic"], &common[..], &["--phi", "0", "--phi", "1", "--out", "cat"]].concat());
    assert_eq!(read(d, "tr/predictions.csv"), read(d, "cat/phi_0/predictions.csv"));
    assert_ne!(read(d, "tr/predictions.csv"), read(d, "cat/phi_1/predictions.csv"));
    assert_eq!(read(d, "cat/catalytic.csv").lines().count(), 3);
}

#[test]
fn resolved_config_reproduces_run() {
    let ws = workspace();
    let d = ws.path();
    ok(
        d,
        &["train", "--config", "cfg.toml", "--train", "sim/train.csv", "--test", "sim/test.csv", "--seed", "3", "--out", "a"],
    );
    ok(d, &["train", "--config", "a/config.toml", "--out", "b"]);
    assert_eq!(read(d, "a/model.json"), read(d, "b/model.json"));
    assert_eq!(read(d, "a/predictions.csv"), read(d, "b/predictions.csv"));
    let cfg = read(d, "a/config.toml");
    assert!(cfg.contains("seed = 3"));
}

#[test]
fn env_overrides_seed() {
    let ws = workspace();
    let d = ws.path();
    let out = Command::new(env!("CARGO_BIN_EXE_drive-ep"))
        .args(["simulate", "--n-drives", "5", "--out", "envrun"])
        .current_dir(d)
        .env("DRIVE_EP_SEED", "77")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(read(d, "envrun/config.toml").contains("seed = 77"));
}

#[test]
fn summary_and_epa_outputs() {
    let ws = workspace();
    let d = ws.path();
    let out = drive_ep(d, &["summary", "--plays", "sim/plays.csv", "--out", "sum"]);
    assert!(out.status.success());
    let quality = read(d, "sum/quality.csv");
    assert!(quality.starts_with("group,n_plays,play_share,n_drives,drive_share,points_per_drive"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("good"));
    ok(d, &["train", "--config", "cfg.toml", "--train", "sim/train.csv", "--out", "tr"]);
    ok(
        d,
        &["epa", "--plays", "sim/plays.csv", "--model", "tr/model.json", "--min-plays", "1", "--plot-data", "--out", "epa"],
    );
    assert!(read(d, "epa/epa.csv").starts_with("entity_id,season,n_plays,epa_per_play,ci_lo,ci_hi"));
    assert!(read(d, "epa/epa_plot.csv").starts_with("entity,estimate,lo,hi"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = drive_ep(d, &["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[config]:"));

    let out = drive_ep(d, &["train", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).contains("data.train"));

    std::fs::write(d.join("bad.csv"), "a,b\n1,2\n").unwrap();
    let out = drive_ep(d, &["train", "--train", "bad.csv", "--out", "y"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).starts_with("error[data]:"));

    // A constant era column next to the intercept is rank deficient.
    std::fs::write(
        d.join("rank.toml"),
        r#"
[synth]
first_season = 2022
last_season = 2022
[trainer]
kind = "weighted"
fitter = { kind = "mlr", recipe = { kind = "linear", features = ["era"] }, config = { l2 = 0.0 } }
"#,
    )
    .unwrap();
    ok(d, &["simulate", "--config", "rank.toml", "--n-drives", "50", "--out", "s"]);
    let out = drive_ep(d, &["train", "--config", "rank.toml", "--train", "s/plays.csv", "--out", "z"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_line(&out).starts_with("error[numeric]:"));
}
