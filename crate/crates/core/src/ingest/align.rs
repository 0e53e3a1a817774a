use std::collections::{BTreeSet, HashMap};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{AssetId, ReturnSeries};
use crate::error::{Error, Result};

/// How series trading on different calendars are put on one date axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignPolicy {
    /// Keep only dates present in every series.
    #[default]
    Intersect,
    /// Keep the union (7-day) axis from the latest series start onward;
    /// days a market was closed get a zero return, which is what a
    /// forward-filled price produces.
    CryptoCalendar,
}

/// Returns of several assets on a shared date axis, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    assets: Vec<AssetId>,
    dates: Vec<NaiveDate>,
    columns: Vec<Vec<f64>>,
}

impl AlignedPanel {
    pub fn new(assets: Vec<AssetId>, dates: Vec<NaiveDate>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if assets.len() != columns.len() {
            return Err(Error::Integrity(format!("{} assets for {} columns", assets.len(), columns.len())));
        }
        if let Some(c) = columns.iter().position(|c| c.len() != dates.len()) {
            return Err(Error::Integrity(format!(
                "column {} has {} rows, axis has {}",
                assets[c],
                columns[c].len(),
                dates.len()
            )));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Integrity("panel date axis not strictly increasing".into()));
        }
        let unique: BTreeSet<_> = assets.iter().collect();
        if unique.len() != assets.len() {
            return Err(Error::Integrity("duplicate asset in panel".into()));
        }
        Ok(AlignedPanel { assets, dates, columns })
    }

    pub fn assets(&self) -> &[AssetId] {
        &self.assets
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn asset_index(&self, asset: &AssetId) -> Option<usize> {
        self.assets.iter().position(|a| a == asset)
    }

    pub fn column(&self, asset: &AssetId) -> Option<&[f64]> {
        self.asset_index(asset).map(|i| self.columns[i].as_slice())
    }

    /// Return at (`date_idx`, `asset_idx`).
    pub fn value(&self, date_idx: usize, asset_idx: usize) -> f64 {
        self.columns[asset_idx][date_idx]
    }

    /// Rows with `start <= date <= end`.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> AlignedPanel {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        let hi = hi.max(lo);
        AlignedPanel {
            assets: self.assets.clone(),
            dates: self.dates[lo..hi].to_vec(),
            columns: self.columns.iter().map(|c| c[lo..hi].to_vec()).collect(),
        }
    }

    /// Rows falling in calendar year `year`.
    pub fn year(&self, year: i32) -> AlignedPanel {
        let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
        let end = NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year");
        self.slice(start, end)
    }

    /// Distinct calendar years on the axis, ascending.
    pub fn years(&self) -> Vec<i32> {
        let mut years: Vec<i32> = self.dates.iter().map(|d| d.year()).collect();
        years.dedup();
        years
    }

    /// Same axis and assets with every column replaced by `f(column)`.
    pub fn map_columns<F>(&self, mut f: F) -> Result<AlignedPanel>
    where
        F: FnMut(&AssetId, &[f64]) -> Result<Vec<f64>>,
    {
        let columns = self
            .assets
            .iter()
            .zip(&self.columns)
            .map(|(a, c)| f(a, c))
            .collect::<Result<Vec<_>>>()?;
        AlignedPanel::new(self.assets.clone(), self.dates.clone(), columns)
    }

    /// Subset of assets, in the requested order.
    pub fn select(&self, assets: &[AssetId]) -> Result<AlignedPanel> {
        let columns = assets
            .iter()
            .map(|a| {
                self.column(a)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| Error::Alignment(format!("asset {a} not in panel")))
            })
            .collect::<Result<Vec<_>>>()?;
        AlignedPanel::new(assets.to_vec(), self.dates.clone(), columns)
    }

    /// One asset's column as a dated series.
    pub fn series(&self, asset: &AssetId) -> Option<ReturnSeries> {
        let col = self.column(asset)?;
        ReturnSeries::new(asset.clone(), self.dates.clone(), col.to_vec()).ok()
    }
}

/// Puts return series on a common date axis according to `policy`.
/// Column order follows the input order.
pub fn align_panel(series: &[ReturnSeries], policy: AlignPolicy) -> Result<AlignedPanel> {
    if series.len() < 2 {
        return Err(Error::insufficient("panel alignment (series)", 2, series.len()));
    }
    if let Some(empty) = series.iter().find(|s| s.is_empty()) {
        return Err(Error::Alignment(format!("series {} is empty", empty.asset())));
    }

    let axis: Vec<NaiveDate> = match policy {
        AlignPolicy::Intersect => {
            let mut common: BTreeSet<NaiveDate> = series[0].dates().iter().copied().collect();
            for s in &series[1..] {
                let other: BTreeSet<NaiveDate> = s.dates().iter().copied().collect();
                common = common.intersection(&other).copied().collect();
            }
            common.into_iter().collect()
        }
        AlignPolicy::CryptoCalendar => {
            let first = series.iter().map(|s| s.dates()[0]).max().expect("nonempty");
            let union: BTreeSet<NaiveDate> = series.iter().flat_map(|s| s.dates().iter().copied()).collect();
            union.into_iter().filter(|d| *d >= first).collect()
        }
    };
    if axis.is_empty() {
        return Err(Error::Alignment("no common dates across series".into()));
    }

    let columns = series
        .iter()
        .map(|s| {
            let lookup: HashMap<NaiveDate, f64> = s.dates().iter().copied().zip(s.values().iter().copied()).collect();
            axis.iter().map(|d| lookup.get(d).copied().unwrap_or(0.0)).collect()
        })
        .collect();
    let assets = series.iter().map(|s| s.asset().clone()).collect();
    AlignedPanel::new(assets, axis, columns)
}
