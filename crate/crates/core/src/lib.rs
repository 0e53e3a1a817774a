//! Stability diagnostics for daily asset returns.
//!
//! The crate covers the full chain from raw prices to verdicts:
//!
//! - [`ingest`]: price loading and fetching, log returns, calendar alignment, descriptive statistics
//! - [`spectral`]: DFT and raw periodogram power spectral density
//! - [`lowfreq`]: orthonormal DCT-II and the truncated cosine (low-frequency) projection
//! - [`similarity`]: Pearson correlation matrices and dynamic time warping
//! - [`structural`]: OLS / recursive residual CUSUM tests with Kolmogorov critical values
//! - [`report`]: configuration, the end-to-end pipeline, exports and SVG plots

pub mod error;
pub mod fixture;
pub mod ingest;
pub mod lowfreq;
pub mod report;
pub mod similarity;
pub mod spectral;
pub mod structural;

pub use error::{Error, Result};
