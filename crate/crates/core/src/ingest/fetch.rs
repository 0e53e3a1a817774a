//! Daily close history client for a CryptoCompare-style `histoday` endpoint,
//! with an on-disk cache so repeated runs never touch the network.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{Days, NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use super::{load_price_csv, AssetId, CsvSchema, PricePoint, PriceSeries};
use crate::error::{Error, Result};

/// Environment variable holding the market-data API key.
pub const API_KEY_ENV: &str = "STABKIT_API_KEY";
/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "STABKIT_CACHE_DIR";

const DEFAULT_BASE_URL: &str = "https://min-api.cryptocompare.com";
const MAX_POINTS_PER_REQUEST: u64 = 2000;

/// Inclusive calendar-day range. `end < start` denotes the empty range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn n_days(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            (self.end - self.start).num_days() as u64 + 1
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.n_days()).map(move |i| self.start + Days::new(i))
    }
}

/// Minimal GET abstraction so the client can be driven without a network.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, query: &[(&str, String)], headers: &[(&str, String)]) -> Result<String>;
}

/// Blocking HTTP transport.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        UreqTransport { agent: config.into() }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        UreqTransport::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, query: &[(&str, String)], headers: &[(&str, String)]) -> Result<String> {
        let mut req = self.agent.get(url);
        for (k, v) in query {
            req = req.query(*k, v);
        }
        for (k, v) in headers {
            req = req.header(*k, v);
        }
        let mut resp = req.call().map_err(|e| {
            let retryable = match &e {
                ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
                ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::HostNotFound => true,
                _ => false,
            };
            Error::Fetch { retryable, message: e.to_string() }
        })?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| Error::Fetch { retryable: true, message: e.to_string() })
    }
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub currency: String,
    pub cache_dir: PathBuf,
    /// Serve only from cache; a miss is an error.
    pub offline: bool,
    pub max_retries: u32,
    pub retry_backoff: Duration,
}

impl FetchConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        FetchConfig {
            base_url: DEFAULT_BASE_URL.into(),
            api_key: None,
            currency: "USD".into(),
            cache_dir: cache_dir.into(),
            offline: false,
            max_retries: 3,
            retry_backoff: Duration::from_millis(500),
        }
    }

    /// Reads the API key and (if set) the cache directory from the environment.
    pub fn from_env(default_cache_dir: impl Into<PathBuf>) -> Self {
        let cache_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| default_cache_dir.into());
        let mut cfg = FetchConfig::new(cache_dir);
        cfg.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome {
    pub series: PriceSeries,
    /// Calendar days in the range with no usable close.
    pub gaps: Vec<NaiveDate>,
    pub from_cache: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheSidecar {
    asset: AssetId,
    currency: String,
    range: DateRange,
    base_url: String,
    rows: usize,
    gaps: Vec<NaiveDate>,
}

#[derive(Deserialize)]
struct Envelope {
    #[serde(rename = "Response")]
    response: String,
    #[serde(rename = "Message", default)]
    message: String,
    #[serde(rename = "Data")]
    data: Option<DataBlock>,
}

#[derive(Deserialize)]
struct DataBlock {
    #[serde(rename = "Data", default)]
    data: Vec<Bar>,
}

#[derive(Deserialize)]
struct Bar {
    time: i64,
    close: f64,
}

pub struct MarketDataClient<T: Transport = UreqTransport> {
    config: FetchConfig,
    transport: T,
    // One request in flight per endpoint.
    gate: Mutex<()>,
}

impl MarketDataClient<UreqTransport> {
    pub fn with_default_transport(config: FetchConfig) -> Self {
        MarketDataClient::new(config, UreqTransport::default())
    }
}

impl<T: Transport> MarketDataClient<T> {
    pub fn new(config: FetchConfig, transport: T) -> Self {
        MarketDataClient { config, transport, gate: Mutex::new(()) }
    }

    pub fn config(&self) -> &FetchConfig {
        &self.config
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn cache_paths(&self, asset: &AssetId, range: DateRange) -> (PathBuf, PathBuf) {
        let stem = format!("{}_{}_{}_{}", asset.file_stem(), self.config.currency, range.start, range.end);
        let dir = &self.config.cache_dir;
        (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
    }

    /// Daily closes for `range`, from cache when available.
    pub fn fetch_daily_history(&self, asset: &AssetId, range: DateRange) -> Result<FetchOutcome> {
        if range.is_empty() {
            return Ok(FetchOutcome { series: PriceSeries::empty(asset.clone()), gaps: vec![], from_cache: false });
        }
        let (csv_path, meta_path) = self.cache_paths(asset, range);
        if csv_path.exists() && meta_path.exists() {
            return read_cache(asset, &csv_path, &meta_path);
        }
        if self.config.offline {
            return Err(Error::Fetch {
                retryable: false,
                message: format!("{asset} {}..{} not cached and offline mode is set", range.start, range.end),
            });
        }

        let mut closes = BTreeMap::new();
        let mut cursor = range.end;
        let mut remaining = range.n_days();
        while remaining > 0 {
            let chunk = remaining.min(MAX_POINTS_PER_REQUEST);
            let body = self.request_with_retry(asset, cursor, chunk)?;
            for (date, close) in parse_payload(&body)? {
                if range.contains(date) && close > 0.0 && close.is_finite() {
                    closes.insert(date, close);
                }
            }
            remaining -= chunk;
            match cursor.checked_sub_days(Days::new(chunk)) {
                Some(c) => cursor = c,
                None => break,
            }
        }

        let gaps: Vec<NaiveDate> = range.days().filter(|d| !closes.contains_key(d)).collect();
        if !gaps.is_empty() {
            log::warn!("{asset}: {} missing days in {}..{}", gaps.len(), range.start, range.end);
        }
        let observations = closes.into_iter().map(|(date, price)| PricePoint { date, price }).collect();
        let series = PriceSeries::new(asset.clone(), observations)?;
        write_cache(&series, &gaps, range, &self.config, &csv_path, &meta_path)?;
        Ok(FetchOutcome { series, gaps, from_cache: false })
    }

    fn request_with_retry(&self, asset: &AssetId, to: NaiveDate, points: u64) -> Result<String> {
        let url = format!("{}/data/v2/histoday", self.config.base_url.trim_end_matches('/'));
        let to_ts = to.and_time(NaiveTime::MIN).and_utc().timestamp();
        let query = [
            ("fsym", asset.as_str().to_string()),
            ("tsym", self.config.currency.clone()),
            ("limit", (points - 1).to_string()),
            ("toTs", to_ts.to_string()),
        ];
        let headers: Vec<(&str, String)> =
            self.config.api_key.iter().map(|k| ("authorization", format!("Apikey {k}"))).collect();

        let _guard = self.gate.lock().unwrap_or_else(|p| p.into_inner());
        let mut attempt = 0;
        loop {
            match self.transport.get(&url, &query, &headers) {
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    attempt += 1;
                    log::warn!("{asset}: fetch attempt {attempt} failed ({e}), retrying");
                    std::thread::sleep(self.config.retry_backoff * 2u32.pow(attempt - 1));
                }
                other => return other,
            }
        }
    }
}

fn parse_payload(body: &str) -> Result<Vec<(NaiveDate, f64)>> {
    let env: Envelope = serde_json::from_str(body)
        .map_err(|e| Error::Fetch { retryable: false, message: format!("malformed payload: {e}") })?;
    if env.response != "Success" {
        let retryable = env.message.to_lowercase().contains("rate limit");
        return Err(Error::Fetch { retryable, message: env.message });
    }
    env.data
        .map(|d| d.data)
        .unwrap_or_default()
        .into_iter()
        .map(|bar| {
            let date = chrono::DateTime::from_timestamp(bar.time, 0)
                .ok_or_else(|| Error::Fetch { retryable: false, message: format!("bad timestamp {}", bar.time) })?
                .date_naive();
            Ok((date, bar.close))
        })
        .collect()
}

fn read_cache(asset: &AssetId, csv_path: &Path, meta_path: &Path) -> Result<FetchOutcome> {
    let series = load_price_csv(fs::File::open(csv_path)?, asset.clone(), &CsvSchema::default())?;
    let meta: CacheSidecar = serde_json::from_reader(fs::File::open(meta_path)?)?;
    Ok(FetchOutcome { series, gaps: meta.gaps, from_cache: true })
}

fn write_cache(
    series: &PriceSeries,
    gaps: &[NaiveDate],
    range: DateRange,
    config: &FetchConfig,
    csv_path: &Path,
    meta_path: &Path,
) -> Result<()> {
    fs::create_dir_all(&config.cache_dir)?;
    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(["date", "price"])?;
    for p in series.observations() {
        w.write_record([p.date.to_string(), p.price.to_string()])?;
    }
    w.flush()?;
    let meta = CacheSidecar {
        asset: series.asset().clone(),
        currency: config.currency.clone(),
        range,
        base_url: config.base_url.clone(),
        rows: series.len(),
        gaps: gaps.to_vec(),
    };
    fs::write(meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
