use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::str::FromStr;

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    align_panel, describe_values, load_price_csv, moving_average, to_returns, AlignedPanel, AssetId, CsvSchema,
    FetchConfig, MarketDataClient, PriceSeries, ReturnSeries, StatsSummary, Transport,
};
use crate::lowfreq::{low_frequency, FilterSpec};
use crate::similarity::{correlation_matrix, dtw_matrix, dtw_with_options, CorrelationMatrix, DtwMatrix, FilterState};
use crate::spectral::{psd, SpectrumDensity};
use crate::structural::simulate::{size_study, SizeStudy, StableDgp};
use crate::structural::{
    boundary, build_design, critical_value, cusum_test, ols_cusum, ols_fit, rec_cusum, recursive_residuals,
    recursive_sigma, BoundaryKind, CusumKind, CusumOutcome, CusumPath,
};

use super::config::{FilterScope, PipelineConfig, Window};
use super::export;
use super::manifest::{ArtifactWriter, CellStatus, Failure, InventoryCell, Manifest};
use super::plot::render_plots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Stats,
    Filter,
    Spectrum,
    Correlate,
    Dtw,
    Cusum,
    Calibrate,
    Plots,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Stats,
        Stage::Filter,
        Stage::Spectrum,
        Stage::Correlate,
        Stage::Dtw,
        Stage::Cusum,
        Stage::Calibrate,
        Stage::Plots,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Stats => "stats",
            Stage::Filter => "filter",
            Stage::Spectrum => "spectrum",
            Stage::Correlate => "correlate",
            Stage::Dtw => "dtw",
            Stage::Cusum => "cusum",
            Stage::Calibrate => "calibrate",
            Stage::Plots => "plots",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub asset: AssetId,
    /// `daily` (raw log returns) or `annualized`.
    pub variant: String,
    #[serde(flatten)]
    pub summary: StatsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub asset: AssetId,
    pub filter_state: FilterState,
    pub density: SpectrumDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSegment {
    pub period: String,
    pub spec: FilterSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredRecord {
    pub asset: AssetId,
    pub dates: Vec<NaiveDate>,
    pub raw: Vec<f64>,
    pub filtered: Vec<f64>,
    pub segments: Vec<FilterSegment>,
}

/// One CUSUM process with its boundary tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumRun {
    pub target: AssetId,
    pub window: String,
    pub filter_state: FilterState,
    pub path: CusumPath,
    pub outcomes: Vec<CusumOutcome>,
}

impl CusumRun {
    pub fn kind(&self) -> CusumKind {
        self.path.kind
    }

    pub fn records(&self) -> Vec<CusumRecord> {
        self.outcomes
            .iter()
            .map(|o| CusumRecord {
                target: self.target.clone(),
                window: self.window.clone(),
                filter_state: self.filter_state,
                kind: self.path.kind,
                boundary: o.boundary.kind,
                level: o.boundary.level,
                sup_statistic: o.sup_statistic,
                crossed: o.crossed,
                first_crossing_tau: o.first_crossing_tau,
            })
            .collect()
    }

    fn stem(&self) -> String {
        format!("{}_{}_{}_{}", self.path.kind.as_str(), self.target.file_stem(), self.window, self.filter_state)
    }
}

/// Flat verdict record written to the CUSUM JSON artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumRecord {
    pub target: AssetId,
    pub window: String,
    pub filter_state: FilterState,
    pub kind: CusumKind,
    pub boundary: BoundaryKind,
    pub level: f64,
    pub sup_statistic: f64,
    pub crossed: bool,
    pub first_crossing_tau: Option<f64>,
}

/// Warping path between two assets over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwAlignment {
    pub x: AssetId,
    pub y: AssetId,
    pub period: String,
    pub dates: Vec<NaiveDate>,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub path: Vec<(usize, usize)>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportBundle {
    pub stats: Vec<StatsRow>,
    pub spectra: Vec<SpectrumRecord>,
    pub filtered: Vec<FilteredRecord>,
    pub correlations: Vec<CorrelationMatrix>,
    pub dtw: Vec<DtwMatrix>,
    pub alignment: Option<DtwAlignment>,
    pub cusum: Vec<CusumRun>,
    pub calibration: Option<SizeStudy>,
    pub manifest: Option<Manifest>,
}

struct Ledger {
    cells: Vec<InventoryCell>,
    failures: Vec<Failure>,
}

impl Ledger {
    fn cell(&mut self, analysis: &str, period: &str, state: Option<FilterState>, subject: &str) -> usize {
        self.cells.push(InventoryCell {
            analysis: analysis.into(),
            period: period.into(),
            filter_state: state.map(|s| s.to_string()),
            subject: subject.into(),
            status: CellStatus::Skipped,
            artifacts: vec![],
        });
        self.cells.len() - 1
    }

    fn done(&mut self, idx: usize, artifacts: Vec<String>) {
        self.cells[idx].status = CellStatus::Ok;
        self.cells[idx].artifacts = artifacts;
    }

    fn fail(&mut self, idx: Option<usize>, stage: Stage, subject: impl Into<String>, err: &Error) {
        let subject = subject.into();
        warn!("{} failed for {subject}: {err}", stage.as_str());
        if let Some(i) = idx {
            self.cells[i].status = CellStatus::Failed;
        }
        self.failures.push(Failure { stage: stage.as_str().into(), subject, error: err.to_string() });
    }
}

/// Runs every stage with the network client built from the config.
pub fn run_pipeline(config: &PipelineConfig, stages: &BTreeSet<Stage>) -> Result<ReportBundle> {
    let client = MarketDataClient::with_default_transport(fetch_config(config));
    run_pipeline_with_client(config, stages, &client)
}

fn fetch_config(config: &PipelineConfig) -> FetchConfig {
    let mut fc = FetchConfig::from_env(config.cache_dir());
    if let Some(url) = &config.api.base_url {
        fc.base_url = url.clone();
    }
    if let Some(dir) = &config.cache_dir {
        fc.cache_dir = dir.clone();
    }
    fc.currency = config.api.currency.clone();
    fc.offline = config.offline;
    fc
}

fn load_asset<T: Transport>(
    config: &PipelineConfig,
    index: usize,
    client: &MarketDataClient<T>,
) -> Result<PriceSeries> {
    let src = &config.assets[index];
    let range = config.date_range;
    let series = match &src.csv {
        Some(path) => {
            let path = config.resolve(path);
            let file = File::open(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let defaults = CsvSchema::default();
            let schema = CsvSchema {
                date_column: src.date_column.clone().unwrap_or(defaults.date_column),
                price_column: src.price_column.clone().unwrap_or(defaults.price_column),
            };
            load_price_csv(file, src.id.clone(), &schema)?
        }
        None => {
            let symbol = AssetId::new(src.api.clone().unwrap_or_else(|| src.id.to_string()));
            let out = client.fetch_daily_history(&symbol, range)?;
            if !out.gaps.is_empty() {
                warn!("{}: {} missing days", src.id, out.gaps.len());
            }
            PriceSeries::new(src.id.clone(), out.series.observations().to_vec())?
        }
    };
    Ok(series.restrict(range.start, range.end))
}

fn year_label(y: i32) -> String {
    y.to_string()
}

fn filter_panel(
    config: &PipelineConfig,
    panel: &AlignedPanel,
    ledger: &mut Ledger,
    cells: &BTreeMap<AssetId, usize>,
) -> (Option<AlignedPanel>, Vec<FilteredRecord>) {
    let years = panel.years();
    let mut records = vec![];
    let mut kept = vec![];
    for asset in panel.assets() {
        let raw = panel.column(asset).expect("asset in panel").to_vec();
        let result: Result<(Vec<f64>, Vec<FilterSegment>)> = match config.filter.scope {
            FilterScope::FullSample => low_frequency(&raw, config.filter.q_override)
                .map(|(f, spec)| (f, vec![FilterSegment { period: config.full_window().label, spec }])),
            FilterScope::PerYear => years
                .iter()
                .map(|&y| {
                    let col = panel.year(y).column(asset).expect("asset in panel").to_vec();
                    low_frequency(&col, config.filter.q_override)
                        .map(|(f, spec)| (f, FilterSegment { period: year_label(y), spec }))
                })
                .collect::<Result<Vec<_>>>()
                .map(|parts| {
                    let mut f = vec![];
                    let mut segs = vec![];
                    for (part, seg) in parts {
                        f.extend(part);
                        segs.push(seg);
                    }
                    (f, segs)
                }),
        };
        match result {
            Ok((filtered, segments)) => {
                kept.push(asset.clone());
                records.push(FilteredRecord {
                    asset: asset.clone(),
                    dates: panel.dates().to_vec(),
                    raw,
                    filtered,
                    segments,
                });
            }
            Err(e) => ledger.fail(cells.get(asset).copied(), Stage::Filter, asset.to_string(), &e),
        }
    }
    if kept.is_empty() {
        return (None, records);
    }
    let columns = records.iter().map(|r| r.filtered.clone()).collect();
    let post = AlignedPanel::new(kept, panel.dates().to_vec(), columns).ok();
    (post, records)
}

struct CusumCell {
    kind: CusumKind,
    window: Window,
    state: FilterState,
    target: AssetId,
}

fn run_cusum_cell(config: &PipelineConfig, panel: &AlignedPanel, cell: &CusumCell) -> Result<CusumRun> {
    let window = panel.slice(cell.window.start, cell.window.end);
    let design = build_design(&window, &cell.target, &config.regressors())?;
    let (path, kinds) = match cell.kind {
        CusumKind::Ols => (ols_cusum(&ols_fit(&design)?)?, &config.cusum.ols_boundaries),
        CusumKind::Recursive => {
            let rr = recursive_residuals(&design)?;
            (rec_cusum(&rr.values, recursive_sigma(&rr.values)?)?, &config.cusum.rec_boundaries)
        }
    };
    let outcomes = kinds
        .iter()
        .map(|&k| {
            let curve = boundary(k, &path.taus, config.cusum.level(k), config.cusum.linear_form)?;
            cusum_test(&path, &curve)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CusumRun {
        target: cell.target.clone(),
        window: cell.window.label.clone(),
        filter_state: cell.state,
        path,
        outcomes,
    })
}

/// Runs the requested stages and writes artifacts plus `manifest.json` under
/// `config.output_dir`. Per-cell failures are recorded in the manifest and do
/// not abort the run; configuration and I/O errors do.
pub fn run_pipeline_with_client<T: Transport>(
    config: &PipelineConfig,
    stages: &BTreeSet<Stage>,
    client: &MarketDataClient<T>,
) -> Result<ReportBundle> {
    config.validate()?;
    let writer = ArtifactWriter::new(&config.output_dir)?;
    let mut ledger = Ledger { cells: vec![], failures: vec![] };
    let mut bundle = ReportBundle::default();
    let years = config.years();
    let states = {
        let mut s = config.filter_states.clone();
        s.sort();
        s.dedup();
        s
    };

    // Load and transform to returns.
    let mut returns: Vec<ReturnSeries> = vec![];
    for (i, src) in config.assets.iter().enumerate() {
        let loaded = load_asset(config, i, client).and_then(|p| to_returns(&p, config.annualization));
        match loaded {
            Ok(r) => returns.push(r),
            Err(e) => ledger.fail(None, Stage::Stats, src.id.to_string(), &e),
        }
    }
    info!("loaded {} of {} assets", returns.len(), config.assets.len());

    if stages.contains(&Stage::Stats) {
        stats_stage(config, &returns, &writer, &mut ledger, &mut bundle)?;
    }

    let panel = if returns.is_empty() {
        None
    } else {
        match align_panel(&returns, config.alignment) {
            Ok(p) => Some(p),
            Err(e) => {
                ledger.fail(None, Stage::Stats, "alignment", &e);
                None
            }
        }
    };

    let needs_post = states.contains(&FilterState::Post)
        && stages.iter().any(|s| matches!(s, Stage::Spectrum | Stage::Correlate | Stage::Dtw | Stage::Cusum));
    let mut post: Option<AlignedPanel> = None;
    if stages.contains(&Stage::Filter) || needs_post {
        let mut cells = BTreeMap::new();
        for a in config.asset_ids() {
            cells.insert(a.clone(), ledger.cell("filter", &config.full_window().label, None, a.as_str()));
        }
        if let Some(p) = &panel {
            let (pp, records) = filter_panel(config, p, &mut ledger, &cells);
            post = pp;
            for rec in &records {
                let rel = format!("filtered/{}.csv", rec.asset.file_stem());
                writer.write(&rel, &export::filtered_csv(rec)?)?;
                let specs = format!("filtered/{}_spec.json", rec.asset.file_stem());
                writer.write_json(&specs, &rec.segments)?;
                ledger.done(cells[&rec.asset], vec![rel, specs]);
            }
            bundle.filtered = records;
        }
        for (a, &i) in &cells {
            if ledger.cells[i].status == CellStatus::Skipped {
                ledger.fail(Some(i), Stage::Filter, a.to_string(), &Error::Config("no aligned data".into()));
            }
        }
    }
    let panel_for = |s: FilterState| -> Option<&AlignedPanel> {
        match s {
            FilterState::Pre => panel.as_ref(),
            FilterState::Post => post.as_ref(),
        }
    };
    let missing = |what: &str| Error::Config(format!("no {what} panel available"));

    if stages.contains(&Stage::Spectrum) {
        for &state in &states {
            for a in config.asset_ids() {
                let idx = ledger.cell("spectrum", &config.full_window().label, Some(state), a.as_str());
                let res = panel_for(state)
                    .ok_or_else(|| missing(state.as_str()))
                    .and_then(|p| p.column(&a).ok_or_else(|| Error::Config(format!("asset {a} not in panel"))))
                    .and_then(|col| psd(col, config.sampling_interval));
                match res {
                    Ok(density) => {
                        let rel = format!("spectrum/{}_{}.csv", a.file_stem(), state);
                        writer.write(&rel, &export::spectrum_csv(&density)?)?;
                        ledger.done(idx, vec![rel]);
                        bundle.spectra.push(SpectrumRecord { asset: a, filter_state: state, density });
                    }
                    Err(e) => ledger.fail(Some(idx), Stage::Spectrum, format!("{a} {state}"), &e),
                }
            }
        }
    }

    if stages.contains(&Stage::Correlate) {
        for &state in &states {
            for &y in &years {
                let period = year_label(y);
                let idx = ledger.cell("correlation", &period, Some(state), "all");
                let res = panel_for(state)
                    .ok_or_else(|| missing(state.as_str()))
                    .and_then(|p| correlation_matrix(&p.year(y), period.clone(), state));
                match res {
                    Ok(m) => {
                        let stem = format!("correlation/{period}_{state}");
                        writer.write(&format!("{stem}.csv"), &export::correlation_csv(&m)?)?;
                        writer.write_json(&format!("{stem}.json"), &m)?;
                        ledger.done(idx, vec![format!("{stem}.csv"), format!("{stem}.json")]);
                        bundle.correlations.push(m);
                    }
                    Err(e) => ledger.fail(Some(idx), Stage::Correlate, format!("{period} {state}"), &e),
                }
            }
        }
    }

    if stages.contains(&Stage::Dtw) {
        let baseline = config.dtw_baseline();
        for &state in &states {
            for &y in &years {
                let period = year_label(y);
                let idx = ledger.cell("dtw", &period, Some(state), "all");
                let res = panel_for(state)
                    .ok_or_else(|| missing(state.as_str()))
                    .and_then(|p| dtw_matrix(&p.year(y), &baseline, period.clone(), state, config.dtw.options));
                match res {
                    Ok(m) => {
                        let stem = format!("dtw/{period}_{state}");
                        writer.write(&format!("{stem}.csv"), &export::dtw_csv(&m)?)?;
                        writer.write_json(&format!("{stem}.json"), &m)?;
                        ledger.done(idx, vec![format!("{stem}.csv"), format!("{stem}.json")]);
                        bundle.dtw.push(m);
                    }
                    Err(e) => ledger.fail(Some(idx), Stage::Dtw, format!("{period} {state}"), &e),
                }
            }
        }
        if let (Some((x, y)), Some(&last)) = (&config.dtw.alignment_pair, years.last()) {
            let period = year_label(last);
            let idx = ledger.cell("dtw-alignment", &period, Some(FilterState::Pre), &format!("{x}-{y}"));
            match alignment(config, panel.as_ref(), x, y, last) {
                Ok(a) => {
                    let rel = format!("dtw/alignment_{}_{}_{period}.csv", x.file_stem(), y.file_stem());
                    writer.write(&rel, &export::alignment_csv(&a)?)?;
                    ledger.done(idx, vec![rel]);
                    bundle.alignment = Some(a);
                }
                Err(e) => ledger.fail(Some(idx), Stage::Dtw, format!("alignment {x}-{y}"), &e),
            }
        }
    }

    if stages.contains(&Stage::Cusum) {
        let mut cells = vec![];
        for (kind, windows) in [(CusumKind::Ols, config.ols_windows()), (CusumKind::Recursive, config.rec_windows())] {
            for w in &windows {
                for &state in &states {
                    for target in config.cusum_targets() {
                        cells.push(CusumCell { kind, window: w.clone(), state, target });
                    }
                }
            }
        }
        let results: Vec<Result<CusumRun>> = cells
            .par_iter()
            .map(|c| {
                panel_for(c.state)
                    .ok_or_else(|| missing(c.state.as_str()))
                    .and_then(|p| run_cusum_cell(config, p, c))
            })
            .collect();
        for (c, res) in cells.iter().zip(results) {
            let analysis = format!("{}-cusum", c.kind.as_str());
            let idx = ledger.cell(&analysis, &c.window.label, Some(c.state), c.target.as_str());
            match res {
                Ok(run) => {
                    let stem = format!("cusum/{}", run.stem());
                    writer.write_json(&format!("{stem}.json"), &run.records())?;
                    writer.write(&format!("{stem}.csv"), &export::cusum_csv(&run)?)?;
                    ledger.done(idx, vec![format!("{stem}.csv"), format!("{stem}.json")]);
                    bundle.cusum.push(run);
                }
                Err(e) => ledger.fail(
                    Some(idx),
                    Stage::Cusum,
                    format!("{} {} {} {}", c.kind.as_str(), c.target, c.window.label, c.state),
                    &e,
                ),
            }
        }
    }

    if stages.contains(&Stage::Calibrate) && config.monte_carlo.replications > 0 {
        let mc = &config.monte_carlo;
        let idx = ledger.cell("calibration", "simulated", None, "ols-cusum size");
        let res = critical_value(mc.confidence).and_then(|level| {
            size_study(&StableDgp::new(mc.n, mc.k, 1.0), mc.replications, config.seed, level, &[0.25, 0.5, 0.75])
        });
        match res {
            Ok(study) => {
                let rel = "calibration/size_study.json".to_string();
                writer.write_json(&rel, &study)?;
                ledger.done(idx, vec![rel]);
                bundle.calibration = Some(study);
            }
            Err(e) => ledger.fail(Some(idx), Stage::Calibrate, "size study", &e),
        }
    }

    if stages.contains(&Stage::Plots) {
        let plots = render_plots(&bundle);
        for f in &plots.files {
            writer.write(&f.path, f.svg.as_bytes())?;
        }
        for m in &plots.missing {
            warn!("plot skipped: {m}");
        }
    }

    let mut manifest = Manifest::new(config.hash(), config.seed);
    manifest.artifacts = writer.records();
    manifest.inventory = ledger.cells;
    manifest.failures = ledger.failures;
    writer.write_json("manifest.json", &manifest)?;
    bundle.manifest = Some(manifest);
    Ok(bundle)
}

fn stats_stage(
    config: &PipelineConfig,
    returns: &[ReturnSeries],
    writer: &ArtifactWriter,
    ledger: &mut Ledger,
    bundle: &mut ReportBundle,
) -> Result<()> {
    let reference: Option<BTreeSet<NaiveDate>> = config.stats_calendar.as_ref().and_then(|id| {
        returns.iter().find(|r| r.asset() == id).map(|r| r.dates().iter().copied().collect())
    });
    if config.stats_calendar.is_some() && reference.is_none() {
        ledger.fail(None, Stage::Stats, "stats_calendar", &Error::Config("reference asset did not load".into()));
    }
    let mut ma = vec![];
    for a in config.asset_ids() {
        let idx = ledger.cell("stats", &config.full_window().label, None, a.as_str());
        let Some(r) = returns.iter().find(|r| r.asset() == &a) else {
            ledger.fail(Some(idx), Stage::Stats, a.to_string(), &Error::Config("asset did not load".into()));
            continue;
        };
        let values: Vec<f64> = match &reference {
            Some(dates) => r.dates().iter().zip(r.values()).filter(|(d, _)| dates.contains(d)).map(|(_, v)| *v).collect(),
            None => r.values().to_vec(),
        };
        let daily: Vec<f64> = values.iter().map(|v| v / config.annualization).collect();
        let res = describe_values(&daily).and_then(|d| describe_values(&values).map(|a| (d, a)));
        match res {
            Ok((d, an)) => {
                bundle.stats.push(StatsRow { asset: a.clone(), variant: "daily".into(), summary: d });
                bundle.stats.push(StatsRow { asset: a.clone(), variant: "annualized".into(), summary: an });
                ledger.done(idx, vec!["stats/descriptive.csv".into(), "stats/descriptive.json".into()]);
            }
            Err(e) => ledger.fail(Some(idx), Stage::Stats, a.to_string(), &e),
        }
        match moving_average(r, config.moving_average_window) {
            Ok(m) => ma.push((a.clone(), m.dates().to_vec(), m.values().to_vec())),
            Err(e) => warn!("{a}: moving average skipped: {e}"),
        }
    }
    writer.write("stats/descriptive.csv", &export::stats_csv(&bundle.stats)?)?;
    writer.write_json("stats/descriptive.json", &bundle.stats)?;
    writer.write(
        &format!("stats/moving_average_{}.csv", config.moving_average_window),
        &export::moving_average_csv(&ma)?,
    )?;
    Ok(())
}

fn alignment(config: &PipelineConfig, panel: Option<&AlignedPanel>, x: &AssetId, y: &AssetId, year: i32) -> Result<DtwAlignment> {
    let p = panel.ok_or_else(|| Error::Config("no pre panel available".into()))?.year(year);
    let get = |a: &AssetId| p.column(a).map(<[f64]>::to_vec).ok_or_else(|| Error::Config(format!("asset {a} not in panel")));
    let (mut xs, mut ys) = (get(x)?, get(y)?);
    if config.dtw.options.standardize {
        xs = crate::similarity::zscore(&xs);
        ys = crate::similarity::zscore(&ys);
    }
    let res = dtw_with_options(&xs, &ys, config.dtw.options.band)?;
    Ok(DtwAlignment {
        x: x.clone(),
        y: y.clone(),
        period: year_label(year),
        dates: p.dates().to_vec(),
        x_values: xs,
        y_values: ys,
        path: res.path,
        distance: res.distance,
    })
}
