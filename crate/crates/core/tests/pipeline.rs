use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};
use stabkit::ingest::{FetchConfig, MarketDataClient, Transport};
use stabkit::report::{
    render_plots, run_pipeline, run_pipeline_with_client, CellStatus, PipelineConfig, ReportBundle, Stage,
};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn toy(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixtures().join("toy/config.json")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn all() -> BTreeSet<Stage> {
    Stage::ALL.into_iter().collect()
}

#[test]
fn toy_report_writes_every_artifact_listed() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run_pipeline(&toy(dir.path()), &all()).unwrap();
    let m = bundle.manifest.unwrap();
    assert!(m.is_clean(), "{:?}", m.failures);
    assert!(!m.artifacts.is_empty());
    for a in &m.artifacts {
        let bytes = std::fs::read(dir.path().join(&a.path)).unwrap();
        assert_eq!(bytes.len() as u64, a.bytes, "{}", a.path);
        assert_eq!(hex::encode(Sha256::digest(&bytes)), a.sha256, "{}", a.path);
    }
    for cell in &m.inventory {
        assert_eq!(cell.status, CellStatus::Ok);
        for p in &cell.artifacts {
            assert!(m.artifacts.iter().any(|a| &a.path == p), "{p} not recorded");
        }
    }
    for rel in [
        "correlation/2019_pre.csv",
        "dtw/2019_pre.json",
        "cusum/ols_BTC_2019_pre.json",
        "cusum/ols_GOLD_2019_pre.csv",
        "spectrum/BTC_pre.csv",
        "stats/descriptive.csv",
        "plots/spectrum_BTC_pre.svg",
        "plots/dtw_alignment_BTC_GOLD_2019.svg",
    ] {
        assert!(dir.path().join(rel).exists(), "{rel} missing");
    }
    assert!(!dir.path().join("correlation/2019_post.csv").exists());
}

#[test]
fn cusum_json_is_flat_records() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&toy(dir.path()), &BTreeSet::from([Stage::Cusum])).unwrap();
    let text = std::fs::read_to_string(dir.path().join("cusum/ols_BTC_2019_pre.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let recs = v.as_array().unwrap();
    assert_eq!(recs.len(), 2);
    let kinds: Vec<&str> = recs.iter().map(|r| r["boundary"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["ols-const", "ols-sd"]);
    for r in recs {
        for key in ["target", "window", "filter_state", "kind", "level", "sup_statistic", "crossed", "first_crossing_tau"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(r["kind"], "ols");
        assert_eq!(r["filter_state"], "pre");
    }
    let csv = std::fs::read_to_string(dir.path().join("cusum/ols_BTC_2019_pre.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "tau,w,ols-const_upper,ols-const_lower,ols-sd_upper,ols-sd_lower");
}

#[test]
fn failed_cells_are_recorded_and_the_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(dir.path());
    // A duplicated regressor makes every design rank deficient.
    let mut twin = cfg.assets[1].clone();
    twin.id = "GOLD2".into();
    cfg.assets.push(twin);
    cfg.cusum.regressors = Some(vec!["GOLD".into(), "GOLD2".into()]);
    cfg.cusum.targets = Some(vec!["BTC".into()]);
    let bundle = run_pipeline(&cfg, &all()).unwrap();
    let m = bundle.manifest.unwrap();
    let cusum: Vec<_> = m.cells("ols-cusum").collect();
    assert_eq!(cusum.len(), 1);
    assert_eq!(cusum[0].status, CellStatus::Failed);
    assert!(m.failures.iter().any(|f| f.stage == "cusum" && f.error.contains("linearly dependent")));
    assert!(m.cells("correlation").all(|c| c.status == CellStatus::Ok));
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("correlation/2019_pre.csv").exists());
}

#[test]
fn per_year_filter_scope() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::load(&fixtures().join("market-2016-2020/config.json")).unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.filter.scope = stabkit::report::FilterScope::PerYear;
    let bundle = run_pipeline(&cfg, &BTreeSet::from([Stage::Filter])).unwrap();
    assert_eq!(bundle.filtered.len(), 8);
    let btc = &bundle.filtered[0];
    assert_eq!(btc.segments.len(), 5);
    assert_eq!(btc.filtered.len(), btc.raw.len());
    let n: usize = btc.segments.iter().map(|s| s.spec.n).sum();
    assert_eq!(n, btc.raw.len());
    for s in &btc.segments {
        assert_eq!(s.spec.q, s.spec.n / 10 + 3);
    }
}

#[test]
fn empty_bundle_renders_nothing() {
    let plots = render_plots(&ReportBundle::default());
    assert!(plots.files.is_empty());
    assert!(plots.missing.is_empty());
}

#[test]
fn cusum_plot_has_path_and_two_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run_pipeline(&toy(dir.path()), &BTreeSet::from([Stage::Cusum, Stage::Spectrum])).unwrap();
    let plots = render_plots(&bundle);
    let cusum: Vec<_> = plots.files.iter().filter(|f| f.path.starts_with("plots/cusum_")).collect();
    assert_eq!(cusum.len(), 4);
    for f in cusum {
        assert_eq!(f.svg.matches("class=\"boundary ").count(), 2, "{}", f.path);
        assert_eq!(f.svg.matches("class=\"path\"").count(), 1);
        assert!(f.svg.starts_with("<svg") && f.svg.trim_end().ends_with("</svg>"));
    }
    let psd = plots.files.iter().find(|f| f.path == "plots/spectrum_BTC_pre.svg").unwrap();
    assert!(psd.svg.contains("Nyquist 0.005"));
    assert!(psd.svg.contains("class=\"nyquist\""));
}

#[test]
fn titles_are_xml_escaped() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::load(&fixtures().join("market-2016-2020/config.json")).unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.assets.retain(|a| ["S&P500", "MSCI"].contains(&a.id.as_str()));
    cfg.filter_states = vec![stabkit::similarity::FilterState::Pre];
    cfg.dtw.alignment_pair = None;
    let bundle = run_pipeline(&cfg, &BTreeSet::from([Stage::Spectrum])).unwrap();
    let plots = render_plots(&bundle);
    let sp = plots.files.iter().find(|f| f.path == "plots/spectrum_S_P500_pre.svg").unwrap();
    assert!(sp.svg.contains("S&amp;P500"));
    assert!(!sp.svg.contains("S&P500"));
}

/// Serves a synthetic daily close for any `toTs`/`limit` window.
struct FakeApi {
    calls: AtomicUsize,
}

impl Transport for FakeApi {
    fn get(&self, _url: &str, query: &[(&str, String)], _headers: &[(&str, String)]) -> stabkit::Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let get = |k: &str| query.iter().find(|(q, _)| *q == k).map(|(_, v)| v.clone()).unwrap();
        let to: i64 = get("toTs").parse().unwrap();
        let limit: i64 = get("limit").parse().unwrap();
        let salt = get("fsym").len() as f64;
        let bars: Vec<String> = (0..=limit)
            .map(|i| {
                let t = to - (limit - i) * 86_400;
                let day = (t / 86_400) as f64;
                let close = 100.0 * (1.0 + 0.2 * (day * 0.37 * salt).sin() + 0.001 * day);
                format!(r#"{{"time":{t},"close":{close}}}"#)
            })
            .collect();
        Ok(format!(r#"{{"Response":"Success","Message":"","Data":{{"Data":[{}]}}}}"#, bars.join(",")))
    }
}

#[test]
fn api_sources_use_the_cache_on_rerun() {
    let cache = tempfile::tempdir().unwrap();
    let (out_a, out_b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg: PipelineConfig = serde_json::from_str(
        r#"{
            "assets": [{"id": "BTC"}, {"id": "ETH", "api": "ETHX"}],
            "date_range": {"start": "2019-01-01", "end": "2019-12-31"},
            "filter_states": ["pre"],
            "dtw": {"baseline": ["BTC", "ETH"]},
            "cusum": {"regressors": ["ETH"]}
        }"#,
    )
    .unwrap();
    cfg.output_dir = out_a.path().to_path_buf();
    let client = MarketDataClient::new(FetchConfig::new(cache.path()), FakeApi { calls: AtomicUsize::new(0) });
    let stages = BTreeSet::from([Stage::Stats, Stage::Correlate, Stage::Dtw, Stage::Cusum]);
    let a = run_pipeline_with_client(&cfg, &stages, &client).unwrap().manifest.unwrap();
    assert!(a.is_clean(), "{:?}", a.failures);
    let first_calls = client.transport().calls.load(Ordering::SeqCst);
    assert_eq!(first_calls, 2);

    cfg.output_dir = out_b.path().to_path_buf();
    cfg.offline = true;
    let mut offline = FetchConfig::new(cache.path());
    offline.offline = true;
    let client_b = MarketDataClient::new(offline, FakeApi { calls: AtomicUsize::new(0) });
    let b = run_pipeline_with_client(&cfg, &stages, &client_b).unwrap().manifest.unwrap();
    assert_eq!(client_b.transport().calls.load(Ordering::SeqCst), 0);
    assert_eq!(a, b);
}

#[test]
fn offline_miss_is_a_recorded_failure() {
    let (cache, out) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg: PipelineConfig = serde_json::from_str(
        r#"{"assets": [{"id": "BTC"}], "date_range": {"start": "2019-01-01", "end": "2019-03-31"}}"#,
    )
    .unwrap();
    cfg.output_dir = out.path().to_path_buf();
    let mut fc = FetchConfig::new(cache.path());
    fc.offline = true;
    let client = MarketDataClient::new(fc, FakeApi { calls: AtomicUsize::new(0) });
    let m = run_pipeline_with_client(&cfg, &BTreeSet::from([Stage::Stats]), &client).unwrap().manifest.unwrap();
    assert!(!m.is_clean());
    assert!(m.failures[0].error.contains("offline"));
    assert_eq!(m.cells("stats").next().unwrap().status, CellStatus::Failed);
}

#[test]
fn invalid_config_aborts_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(&dir.path().join("out"));
    cfg.cusum.targets = Some(vec!["DOGE".into()]);
    assert!(run_pipeline(&cfg, &all()).is_err());
    assert!(!dir.path().join("out").exists());
}
