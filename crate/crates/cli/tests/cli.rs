use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/toy/config.json")
}

fn stabkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabkit")).args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("manifest.json")).unwrap()
}

#[test]
fn report_on_toy_config() {
    let out = tempfile::tempdir().unwrap();
    let o = stabkit(&["report", "-c", toy_config().to_str().unwrap(), "-o", out.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 failures"));
    assert!(out.path().join("cusum/ols_BTC_2019_pre.json").exists());
    assert!(out.path().join("plots").is_dir());
    assert!(manifest(out.path()).contains("\"seed\": 42"));
}

#[test]
fn seed_flag_overrides_config() {
    let out = tempfile::tempdir().unwrap();
    let o = stabkit(&[
        "correlate",
        "--config",
        toy_config().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert!(o.status.success());
    let m = manifest(out.path());
    assert!(m.contains("\"seed\": 7"));
    assert!(out.path().join("correlation/2019_pre.csv").exists());
    assert!(!out.path().join("dtw").exists());
}

#[test]
fn subcommands_run_only_their_stage() {
    let out = tempfile::tempdir().unwrap();
    let cfg = toy_config();
    let o = stabkit(&["dtw", "-c", cfg.to_str().unwrap(), "-o", out.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(out.path().join("dtw/2019_pre.csv").exists());
    assert!(out.path().join("dtw/alignment_BTC_GOLD_2019.csv").exists());
    assert!(!out.path().join("cusum").exists());
}

#[test]
fn failed_cells_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/market-2016-2020");
    let gold = fixtures.join("GOLD.csv");
    let cfg = format!(
        r#"{{
            "assets": [
                {{"id": "BTC", "csv": {btc:?}}},
                {{"id": "GOLD", "csv": {gold:?}}},
                {{"id": "GOLD2", "csv": {gold:?}}}
            ],
            "date_range": {{"start": "2019-01-01", "end": "2019-12-31"}},
            "filter_states": ["pre"],
            "cusum": {{"targets": ["BTC"], "regressors": ["GOLD", "GOLD2"], "rec_windows": []}}
        }}"#,
        btc = fixtures.join("BTC.csv"),
    );
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg).unwrap();
    let out = dir.path().join("out");
    let o = stabkit(&["cusum", "-c", path.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed: cusum"));
    assert!(manifest(&out).contains("\"failures\": [\n    {"));
}

#[test]
fn unreadable_config_exits_two() {
    let o = stabkit(&["report", "-c", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn help_lists_subcommands() {
    let o = stabkit(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["fetch", "stats", "filter", "spectrum", "correlate", "dtw", "cusum", "report"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}
