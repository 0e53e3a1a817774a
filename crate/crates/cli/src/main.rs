use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use stabkit::report::{run_pipeline, PipelineConfig, Stage};

#[derive(Parser, Debug)]
#[command(name = "stabkit", version, about = "Stability analysis of daily return series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load every asset (filling the API cache) without running analyses.
    Fetch(Common),
    /// Descriptive statistics and moving averages.
    Stats(Common),
    /// Low-frequency projection of each return series.
    Filter(Common),
    /// Power spectral density per asset.
    Spectrum(Common),
    /// Yearly Pearson correlation matrices.
    Correlate(Common),
    /// Yearly normalized DTW distance matrices.
    Dtw(Common),
    /// OLS- and recursive-CUSUM stability tests.
    Cusum {
        #[command(flatten)]
        common: Common,
        /// Boundary level for the constant and sd-scaled boundaries.
        #[arg(long)]
        nu: Option<f64>,
        /// Boundary level for the linear recursive boundary.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Every stage, plots and (with --replications) the Monte Carlo calibration.
    Report {
        #[command(flatten)]
        common: Common,
        /// Size-study replications; 0 skips calibration.
        #[arg(long)]
        replications: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Use cached market data only.
    #[arg(long)]
    offline: bool,
}

impl Common {
    fn load(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.offline |= self.offline;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let one = |s: Stage| BTreeSet::from([s]);
    let (cfg, stages) = match &cli.command {
        Command::Fetch(c) => (c.load()?, BTreeSet::new()),
        Command::Stats(c) => (c.load()?, one(Stage::Stats)),
        Command::Filter(c) => (c.load()?, one(Stage::Filter)),
        Command::Spectrum(c) => (c.load()?, one(Stage::Spectrum)),
        Command::Correlate(c) => (c.load()?, one(Stage::Correlate)),
        Command::Dtw(c) => (c.load()?, one(Stage::Dtw)),
        Command::Cusum { common, nu, lambda } => {
            let mut cfg = common.load()?;
            if let Some(v) = nu {
                cfg.cusum.nu = *v;
            }
            if let Some(v) = lambda {
                cfg.cusum.lambda = *v;
            }
            (cfg, one(Stage::Cusum))
        }
        Command::Report { common, replications } => {
            let mut cfg = common.load()?;
            if let Some(r) = replications {
                cfg.monte_carlo.replications = *r;
            }
            (cfg, Stage::ALL.into_iter().collect())
        }
    };
    let bundle = run_pipeline(&cfg, &stages).context("pipeline aborted")?;
    let manifest = bundle.manifest.expect("pipeline always writes a manifest");
    println!(
        "{} artifacts, {} cells, {} failures -> {}",
        manifest.artifacts.len(),
        manifest.inventory.len(),
        manifest.failures.len(),
        cfg.output_dir.join("manifest.json").display()
    );
    for f in &manifest.failures {
        eprintln!("failed: {} {}: {}", f.stage, f.subject, f.error);
    }
    Ok(manifest.is_clean())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
