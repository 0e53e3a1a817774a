use super::{PriceSeries, ReturnSeries};
use crate::error::{Error, Result};

/// Days per year used to annualize daily log returns.
pub const DEFAULT_ANNUALIZATION: f64 = 365.0;

/// Window of the trailing moving average plotted alongside returns.
pub const DEFAULT_MA_WINDOW: usize = 50;

/// Annualized log returns `ln(P_t / P_{t-1}) * annualization`, dated at `t`.
pub fn to_returns(prices: &PriceSeries, annualization: f64) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::insufficient("log returns", 2, prices.len()));
    }
    if !(annualization.is_finite() && annualization > 0.0) {
        return Err(Error::Domain(format!("annualization must be positive, got {annualization}")));
    }
    let obs = prices.observations();
    let (dates, values) = obs
        .windows(2)
        .map(|w| (w[1].date, (w[1].price / w[0].price).ln() * annualization))
        .unzip();
    ReturnSeries::new(prices.asset().clone(), dates, values)
}

/// Trailing arithmetic mean over `window` observations, dated at the window end.
pub fn moving_average(returns: &ReturnSeries, window: usize) -> Result<ReturnSeries> {
    if window == 0 {
        return Err(Error::Domain("moving-average window must be at least 1".into()));
    }
    if window > returns.len() {
        return Err(Error::insufficient("moving average", window, returns.len()));
    }
    let values = returns
        .values()
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    let dates = returns.dates()[window - 1..].to_vec();
    ReturnSeries::new(returns.asset().clone(), dates, values)
}
