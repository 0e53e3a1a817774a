//! Loading, fetching and aligning daily price histories.
//!
//! Prices come in as [`PriceSeries`] (from CSV or the market-data client),
//! become annualized log-return [`ReturnSeries`], and are reconciled onto a
//! common date axis as an [`AlignedPanel`] before any cross-asset analysis.

mod align;
mod fetch;
mod load;
mod returns;
mod stats;

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use align::{align_panel, AlignPolicy, AlignedPanel};
pub use fetch::{
    DateRange, FetchConfig, FetchOutcome, MarketDataClient, Transport, UreqTransport,
    API_KEY_ENV, CACHE_DIR_ENV,
};
pub use load::{load_price_csv, CsvSchema};
pub use returns::{moving_average, to_returns, DEFAULT_ANNUALIZATION, DEFAULT_MA_WINDOW};
pub use stats::{describe, describe_values, StatsSummary};

/// Symbol tag of an asset, e.g. `BTC` or `S&P500`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssetId(String);

impl AssetId {
    pub fn new(tag: impl Into<String>) -> Self {
        AssetId(tag.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Tag with characters that are awkward in file names replaced.
    pub fn file_stem(&self) -> String {
        self.0
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect()
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AssetId {
    fn from(s: &str) -> Self {
        AssetId(s.to_string())
    }
}

impl From<String> for AssetId {
    fn from(s: String) -> Self {
        AssetId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub price: f64,
}

/// Daily USD closing prices for one asset, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    asset: AssetId,
    observations: Vec<PricePoint>,
}

impl PriceSeries {
    /// Builds a series, checking date order and price positivity.
    pub fn new(asset: AssetId, observations: Vec<PricePoint>) -> Result<Self> {
        for pair in observations.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(Error::Integrity(format!(
                    "{asset}: dates not strictly increasing at {}",
                    pair[1].date
                )));
            }
        }
        if let Some(bad) = observations.iter().find(|p| !(p.price > 0.0) || !p.price.is_finite()) {
            return Err(Error::Domain(format!(
                "{asset}: non-positive price {} on {}",
                bad.price, bad.date
            )));
        }
        Ok(PriceSeries { asset, observations })
    }

    pub fn empty(asset: AssetId) -> Self {
        PriceSeries { asset, observations: Vec::new() }
    }

    pub fn asset(&self) -> &AssetId {
        &self.asset
    }

    pub fn observations(&self) -> &[PricePoint] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.observations.iter().map(|p| p.date)
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|p| p.price)
    }

    /// Observations with `start <= date <= end`.
    pub fn restrict(&self, start: NaiveDate, end: NaiveDate) -> PriceSeries {
        PriceSeries {
            asset: self.asset.clone(),
            observations: self
                .observations
                .iter()
                .filter(|p| p.date >= start && p.date <= end)
                .copied()
                .collect(),
        }
    }
}

/// Dated returns for one asset, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    asset: AssetId,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(asset: AssetId, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Integrity(format!(
                "{asset}: {} dates for {} values",
                dates.len(),
                values.len()
            )));
        }
        if let Some(pair) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Integrity(format!(
                "{asset}: dates not strictly increasing at {}",
                pair[1]
            )));
        }
        Ok(ReturnSeries { asset, dates, values })
    }

    pub fn asset(&self) -> &AssetId {
        &self.asset
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
