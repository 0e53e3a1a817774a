use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{AlignPolicy, AssetId, DateRange, DEFAULT_ANNUALIZATION};
use crate::similarity::{DtwOptions, FilterState};
use crate::spectral::DEFAULT_SAMPLING_INTERVAL;
use crate::structural::{BoundaryKind, LinearForm, DEFAULT_LAMBDA, DEFAULT_NU, KEY_ASSETS};

/// Where one asset's prices come from: a CSV file or the market-data API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSource {
    pub id: AssetId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// API symbol; defaults to the asset id when `csv` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_column: Option<String>,
}

/// Whether the low-frequency projection runs once over the whole sample or
/// separately inside each calendar year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterScope {
    PerYear,
    #[default]
    FullSample,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub scope: FilterScope,
    /// Fixed truncation order instead of `floor(n/10) + 3`.
    #[serde(default)]
    pub q_override: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtwConfig {
    /// Assets whose largest pairwise distance normalizes the matrix.
    /// Defaults to the key assets present in the panel.
    #[serde(default)]
    pub baseline: Option<Vec<AssetId>>,
    #[serde(default, flatten)]
    pub options: DtwOptions,
    /// Pair whose warping path is exported and plotted for the last year.
    #[serde(default)]
    pub alignment_pair: Option<(AssetId, AssetId)>,
}

/// A labelled sample window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CusumConfig {
    /// Defaults to every asset.
    #[serde(default)]
    pub targets: Option<Vec<AssetId>>,
    /// Lagged regressors; defaults to the configured key assets.
    #[serde(default)]
    pub regressors: Option<Vec<AssetId>>,
    /// Defaults to the whole date range.
    #[serde(default)]
    pub ols_windows: Option<Vec<Window>>,
    /// Defaults to the whole range plus one window starting in each later year.
    #[serde(default)]
    pub rec_windows: Option<Vec<Window>>,
    #[serde(default = "default_ols_boundaries")]
    pub ols_boundaries: Vec<BoundaryKind>,
    #[serde(default = "default_rec_boundaries")]
    pub rec_boundaries: Vec<BoundaryKind>,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub linear_form: LinearForm,
}

impl Default for CusumConfig {
    fn default() -> Self {
        CusumConfig {
            targets: None,
            regressors: None,
            ols_windows: None,
            rec_windows: None,
            ols_boundaries: default_ols_boundaries(),
            rec_boundaries: default_rec_boundaries(),
            nu: DEFAULT_NU,
            lambda: DEFAULT_LAMBDA,
            linear_form: LinearForm::Standard,
        }
    }
}

impl CusumConfig {
    pub fn level(&self, kind: BoundaryKind) -> f64 {
        match kind {
            BoundaryKind::RecLinear => self.lambda,
            _ => self.nu,
        }
    }
}

/// Monte Carlo size study of the OLS-CUSUM test. Skipped when `replications` is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default)]
    pub replications: usize,
    #[serde(default = "default_mc_n")]
    pub n: usize,
    #[serde(default = "default_mc_k")]
    pub k: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig { replications: 0, n: default_mc_n(), k: default_mc_k(), confidence: default_confidence() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiConfig {
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default = "default_currency")]
    pub currency: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub assets: Vec<AssetSource>,
    pub date_range: DateRange,
    #[serde(default)]
    pub alignment: AlignPolicy,
    /// Descriptive statistics count only dates this asset also traded.
    #[serde(default)]
    pub stats_calendar: Option<AssetId>,
    #[serde(default = "default_annualization")]
    pub annualization: f64,
    #[serde(default = "default_sampling_interval")]
    pub sampling_interval: f64,
    #[serde(default = "default_ma_window")]
    pub moving_average_window: usize,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default = "default_filter_states")]
    pub filter_states: Vec<FilterState>,
    #[serde(default)]
    pub dtw: DtwConfig,
    #[serde(default)]
    pub cusum: CusumConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub api: ApiConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub offline: bool,
    /// Directory relative CSV paths resolve against (the config file's directory).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_ols_boundaries() -> Vec<BoundaryKind> {
    vec![BoundaryKind::OlsConst, BoundaryKind::OlsSd]
}
fn default_rec_boundaries() -> Vec<BoundaryKind> {
    vec![BoundaryKind::RecLinear, BoundaryKind::RecSd]
}
fn default_nu() -> f64 {
    DEFAULT_NU
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_mc_n() -> usize {
    500
}
fn default_mc_k() -> usize {
    7
}
fn default_confidence() -> f64 {
    0.95
}
fn default_currency() -> String {
    "USD".into()
}
fn default_annualization() -> f64 {
    DEFAULT_ANNUALIZATION
}
fn default_sampling_interval() -> f64 {
    DEFAULT_SAMPLING_INTERVAL
}
fn default_ma_window() -> usize {
    crate::ingest::DEFAULT_MA_WINDOW
}
fn default_filter_states() -> Vec<FilterState> {
    vec![FilterState::Pre, FilterState::Post]
}
fn default_seed() -> u64 {
    42
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    /// Reads a JSON config; relative CSV paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn asset_ids(&self) -> Vec<AssetId> {
        self.assets.iter().map(|a| a.id.clone()).collect()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.base_dir.join(".stabkit-cache"))
    }

    /// Calendar years touched by the date range.
    pub fn years(&self) -> Vec<i32> {
        if self.date_range.is_empty() {
            return vec![];
        }
        (self.date_range.start.year()..=self.date_range.end.year()).collect()
    }

    fn range_label(start: NaiveDate, end: NaiveDate) -> String {
        if start.year() == end.year() {
            start.year().to_string()
        } else {
            format!("{}-{}", start.year(), end.year())
        }
    }

    pub fn full_window(&self) -> Window {
        let r = self.date_range;
        Window { label: Self::range_label(r.start, r.end), start: r.start, end: r.end }
    }

    pub fn ols_windows(&self) -> Vec<Window> {
        self.cusum.ols_windows.clone().unwrap_or_else(|| vec![self.full_window()])
    }

    pub fn rec_windows(&self) -> Vec<Window> {
        if let Some(w) = &self.cusum.rec_windows {
            return w.clone();
        }
        let r = self.date_range;
        let mut out = vec![self.full_window()];
        for year in r.start.year() + 1..r.end.year() {
            let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
            out.push(Window { label: Self::range_label(start, r.end), start, end: r.end });
        }
        out
    }

    pub fn cusum_targets(&self) -> Vec<AssetId> {
        self.cusum.targets.clone().unwrap_or_else(|| self.asset_ids())
    }

    pub fn regressors(&self) -> Vec<AssetId> {
        self.cusum.regressors.clone().unwrap_or_else(|| self.key_assets())
    }

    pub fn dtw_baseline(&self) -> Vec<AssetId> {
        self.dtw.baseline.clone().unwrap_or_else(|| self.key_assets())
    }

    fn key_assets(&self) -> Vec<AssetId> {
        let ids = self.asset_ids();
        KEY_ASSETS.iter().map(|&a| AssetId::new(a)).filter(|a| ids.contains(a)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.date_range.is_empty() {
            return bad(format!("empty date range {}..{}", self.date_range.start, self.date_range.end));
        }
        if self.assets.is_empty() {
            return bad("no assets configured".into());
        }
        let ids: BTreeSet<&AssetId> = self.assets.iter().map(|a| &a.id).collect();
        if ids.len() != self.assets.len() {
            return bad("duplicate asset id".into());
        }
        for a in &self.assets {
            match (&a.csv, &a.api) {
                (Some(_), Some(_)) => return bad(format!("asset {} has both csv and api sources", a.id)),
                (Some(p), None) if !self.resolve(p).exists() => {
                    return bad(format!("asset {}: file {} not found", a.id, self.resolve(p).display()))
                }
                _ => {}
            }
        }
        let known = |list: &[AssetId], what: &str| -> Result<()> {
            match list.iter().find(|a| !ids.contains(a)) {
                Some(a) => Err(Error::Config(format!("{what} asset {a} is not configured"))),
                None => Ok(()),
            }
        };
        if let Some(c) = &self.stats_calendar {
            known(std::slice::from_ref(c), "stats_calendar")?;
        }
        known(&self.cusum_targets(), "cusum target")?;
        known(&self.regressors(), "cusum regressor")?;
        known(&self.dtw_baseline(), "dtw baseline")?;
        if let Some((a, b)) = &self.dtw.alignment_pair {
            known(&[a.clone(), b.clone()], "dtw alignment")?;
        }
        for w in self.ols_windows().iter().chain(&self.rec_windows()) {
            if w.start > w.end || !self.date_range.contains(w.start) || !self.date_range.contains(w.end) {
                return bad(format!("window {} ({}..{}) outside the date range", w.label, w.start, w.end));
            }
        }
        if self.filter_states.is_empty() {
            return bad("filter_states is empty".into());
        }
        if !(self.annualization > 0.0) || !(self.sampling_interval > 0.0) {
            return bad("annualization and sampling_interval must be positive".into());
        }
        if self.cusum.ols_boundaries.iter().any(|k| matches!(k, BoundaryKind::RecLinear | BoundaryKind::RecSd))
            || self.cusum.rec_boundaries.iter().any(|k| matches!(k, BoundaryKind::OlsConst | BoundaryKind::OlsSd))
        {
            return bad("boundary kind does not match its CUSUM process".into());
        }
        Ok(())
    }

    /// SHA-256 of the analysis-relevant fields (output and cache locations excluded).
    pub fn hash(&self) -> String {
        let mut view = self.clone();
        view.output_dir = PathBuf::new();
        view.cache_dir = None;
        view.offline = false;
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
