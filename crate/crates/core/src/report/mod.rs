//! End-to-end pipeline: load prices, run the requested analyses, write CSV,
//! JSON and SVG artifacts and a manifest listing every cell the config asked for.

mod config;
pub mod export;
mod manifest;
mod pipeline;
pub mod plot;

pub use config::{
    ApiConfig, AssetSource, CusumConfig, DtwConfig, FilterConfig, FilterScope, MonteCarloConfig, PipelineConfig, Window,
};
pub use manifest::{ArtifactRecord, ArtifactWriter, CellStatus, Failure, InventoryCell, Manifest};
pub use pipeline::{
    run_pipeline, run_pipeline_with_client, CusumRecord, CusumRun, DtwAlignment, FilterSegment, FilteredRecord,
    ReportBundle, SpectrumRecord, Stage, StatsRow,
};
pub use plot::{render_plots, PlotFile, PlotSet};
