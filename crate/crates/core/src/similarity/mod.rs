//! Pairwise similarity between return series: Pearson correlation on the
//! same dates, and dynamic time warping that lets one series lead or lag.

mod correlation;
mod dtw;

use serde::{Deserialize, Serialize};

pub use correlation::{correlation_matrix, pearson, CorrelationMatrix};
pub(crate) use dtw::zscore;
pub use dtw::{
    dtw, dtw_distance, dtw_matrix, dtw_with_options, validate_path, CostMatrix, DtwMatrix, DtwOptions, DtwResult,
};

/// Whether a statistic was computed on raw or low-frequency-projected returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterState {
    Pre,
    Post,
}

impl FilterState {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterState::Pre => "pre",
            FilterState::Post => "post",
        }
    }
}

impl std::fmt::Display for FilterState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
