//! Synthetic daily price panel for 2016-2020 used by tests and the demo config.
//!
//! Calendars mimic the real data: crypto assets trade every calendar day,
//! MSCI on a 1259-day exchange calendar, and JPY, EUR, GOLD and S&P500 on
//! that calendar minus nine extra closures (1250 days). Intersecting with
//! the MSCI calendar therefore leaves 1258 returns for crypto and MSCI and
//! 1249 for the rest.
//!
//! Returns follow a one-factor model with fat-tailed crypto noise. Crypto
//! loadings on the market factor and crypto drift change across years so
//! the structural tests have something to find.

use std::collections::BTreeSet;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::ingest::{AssetId, PricePoint, PriceSeries};

pub const FIXTURE_SEED: u64 = 20_160_101;

pub const CRYPTO: [&str; 3] = ["BTC", "ETH", "XRP"];
pub const TRADITIONAL: [&str; 5] = ["JPY", "EUR", "GOLD", "S&P500", "MSCI"];

// Exchange holidays that fall on weekdays, 46 in total.
const MARKET_HOLIDAYS: [(i32, u32, u32); 46] = [
    (2016, 1, 1), (2016, 1, 18), (2016, 2, 15), (2016, 3, 25), (2016, 5, 30),
    (2016, 7, 4), (2016, 9, 5), (2016, 11, 24), (2016, 12, 26),
    (2017, 1, 2), (2017, 1, 16), (2017, 2, 20), (2017, 4, 14), (2017, 5, 29),
    (2017, 7, 4), (2017, 9, 4), (2017, 11, 23), (2017, 12, 25),
    (2018, 1, 1), (2018, 1, 15), (2018, 2, 19), (2018, 3, 30), (2018, 5, 28),
    (2018, 7, 4), (2018, 9, 3), (2018, 11, 22), (2018, 12, 5), (2018, 12, 25),
    (2019, 1, 1), (2019, 1, 21), (2019, 2, 18), (2019, 4, 19), (2019, 5, 27),
    (2019, 7, 4), (2019, 9, 2), (2019, 11, 28), (2019, 12, 25),
    (2020, 1, 1), (2020, 1, 20), (2020, 2, 17), (2020, 4, 10), (2020, 5, 25),
    (2020, 7, 3), (2020, 9, 7), (2020, 11, 26), (2020, 12, 25),
];

// Additional closures for the assets on the shorter calendar.
const EXTRA_CLOSURES: [(i32, u32, u32); 9] = [
    (2016, 3, 28), (2016, 12, 27), (2017, 4, 17), (2017, 12, 26), (2018, 4, 2),
    (2018, 12, 26), (2019, 4, 22), (2019, 12, 26), (2020, 4, 13),
];

fn ymd((y, m, d): (i32, u32, u32)) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid fixture date")
}

pub fn start_date() -> NaiveDate {
    ymd((2016, 1, 1))
}

pub fn end_date() -> NaiveDate {
    ymd((2020, 12, 31))
}

pub fn calendar_days() -> Vec<NaiveDate> {
    let (start, end) = (start_date(), end_date());
    (0..=(end - start).num_days() as u64).map(|i| start + Days::new(i)).collect()
}

/// Weekdays minus exchange holidays (1259 days).
pub fn market_calendar() -> Vec<NaiveDate> {
    let holidays: BTreeSet<NaiveDate> = MARKET_HOLIDAYS.iter().copied().map(ymd).collect();
    calendar_days()
        .into_iter()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !holidays.contains(d))
        .collect()
}

/// Market calendar minus the extra closures (1250 days).
pub fn short_calendar() -> Vec<NaiveDate> {
    let extra: BTreeSet<NaiveDate> = EXTRA_CLOSURES.iter().copied().map(ymd).collect();
    market_calendar().into_iter().filter(|d| !extra.contains(d)).collect()
}

struct AssetModel {
    tag: &'static str,
    start_price: f64,
    drift: f64,
    beta: f64,
    noise: f64,
}

const MODELS: [AssetModel; 5] = [
    AssetModel { tag: "JPY", start_price: 0.0083, drift: 0.00005, beta: -0.15, noise: 0.0045 },
    AssetModel { tag: "EUR", start_price: 1.086, drift: 0.00003, beta: 0.10, noise: 0.0040 },
    AssetModel { tag: "GOLD", start_price: 1061.0, drift: 0.00025, beta: -0.10, noise: 0.0080 },
    AssetModel { tag: "S&P500", start_price: 2012.0, drift: 0.00040, beta: 1.00, noise: 0.0035 },
    AssetModel { tag: "MSCI", start_price: 1662.0, drift: 0.00030, beta: 0.85, noise: 0.0030 },
];

/// Crypto loading on the market factor by year, 2016..=2020.
const CRYPTO_BETA: [f64; 5] = [0.0, 0.2, 0.6, 1.0, 1.6];
/// Extra BTC drift by year (the 2017 run-up and 2018 crash).
const CRYPTO_DRIFT: [f64; 5] = [0.002, 0.008, -0.006, 0.002, 0.005];

/// All eight synthetic price series, crypto first.
pub fn synthetic_market(seed: u64) -> Vec<PriceSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = calendar_days();
    let market: BTreeSet<NaiveDate> = market_calendar().into_iter().collect();
    let short: BTreeSet<NaiveDate> = short_calendar().into_iter().collect();
    let t4 = StudentT::new(4.0).expect("valid dof");

    // Market factor accrues every calendar day; exchange assets realize the
    // accumulated move on their next open day.
    let factor: Vec<f64> = days.iter().map(|_| 0.009 * rng.sample::<f64, _>(StandardNormal)).collect();

    let mut crypto_log: [Vec<f64>; 3] = Default::default();
    let mut level = [430.0f64.ln(), 0.95f64.ln(), 0.0061f64.ln()];
    let scale = [0.035, 0.055, 0.065];
    let link = [0.0, 0.7, 0.6];
    for (i, d) in days.iter().enumerate() {
        let year = (d.year() - 2016) as usize;
        let btc_shock: f64 = t4.sample(&mut rng) / 2f64.sqrt();
        for c in 0..3 {
            if i > 0 {
                let own: f64 = t4.sample(&mut rng) / 2f64.sqrt();
                let shock = link[c] * btc_shock + (1.0 - link[c] * link[c]).sqrt() * own;
                level[c] += CRYPTO_DRIFT[year] * (1.0 + 0.3 * c as f64) + CRYPTO_BETA[year] * factor[i] + scale[c] * shock;
            }
            crypto_log[c].push(level[c]);
        }
    }

    let mut out: Vec<PriceSeries> = CRYPTO
        .iter()
        .zip(crypto_log)
        .map(|(tag, logs)| {
            let obs = days.iter().zip(logs).map(|(&date, l)| PricePoint { date, price: l.exp() }).collect();
            PriceSeries::new(AssetId::new(*tag), obs).expect("valid synthetic series")
        })
        .collect();

    for model in &MODELS {
        let calendar = if model.tag == "MSCI" { &market } else { &short };
        let mut level = model.start_price.ln();
        let mut pending = 0.0;
        let mut obs = Vec::with_capacity(calendar.len());
        for (i, d) in days.iter().enumerate() {
            if i > 0 {
                pending += model.drift + model.beta * factor[i];
            }
            if calendar.contains(d) {
                let noise = if obs.is_empty() { 0.0 } else { model.noise * rng.sample::<f64, _>(StandardNormal) };
                level += pending + noise;
                pending = 0.0;
                obs.push(PricePoint { date: *d, price: level.exp() });
            }
        }
        out.push(PriceSeries::new(AssetId::new(model.tag), obs).expect("valid synthetic series"));
    }
    out
}

/// Writes each series as `<dir>/<stem>.csv` with `date,price` columns.
pub fn write_csvs(series: &[PriceSeries], dir: &std::path::Path) -> crate::Result<()> {
    std::fs::create_dir_all(dir)?;
    for s in series {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", s.asset().file_stem())))?;
        w.write_record(["date", "price"])?;
        for p in s.observations() {
            w.write_record([p.date.to_string(), format!("{:.10e}", p.price)])?;
        }
        w.flush()?;
    }
    Ok(())
}
