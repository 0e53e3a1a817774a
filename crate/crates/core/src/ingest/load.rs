use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{AssetId, PricePoint, PriceSeries};
use crate::error::{Error, Result};

/// Which CSV columns hold the date and the closing price.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub price_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema { date_column: "date".into(), price_column: "price".into() }
    }
}

impl CsvSchema {
    pub fn new(date_column: impl Into<String>, price_column: impl Into<String>) -> Self {
        CsvSchema { date_column: date_column.into(), price_column: price_column.into() }
    }
}

/// Parses a headed UTF-8 CSV of daily prices. Rows may come in any order;
/// the result is sorted by date. Duplicate dates and non-positive prices
/// are rejected.
pub fn load_price_csv<R: Read>(source: R, asset: AssetId, schema: &CsvSchema) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}` in header"),
        })
    };
    let date_idx = column(&schema.date_column)?;
    let price_idx = column(&schema.price_column)?;

    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |idx: usize, name: &str| {
            record.get(idx).ok_or_else(|| Error::Parse { line, message: format!("missing `{name}` field") })
        };
        let date_text = field(date_idx, &schema.date_column)?;
        let price_text = field(price_idx, &schema.price_column)?;
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date `{date_text}`: {e}"),
        })?;
        let price: f64 = price_text.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad price `{price_text}`"),
        })?;
        if !price.is_finite() {
            return Err(Error::Parse { line, message: format!("non-finite price `{price_text}`") });
        }
        if price <= 0.0 {
            return Err(Error::Domain(format!("{asset}: non-positive price {price} on {date} (line {line})")));
        }
        observations.push(PricePoint { date, price });
    }

    observations.sort_by_key(|p| p.date);
    if let Some(dup) = observations.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(Error::Integrity(format!("{asset}: duplicate date {}", dup[0].date)));
    }
    PriceSeries::new(asset, observations)
}
