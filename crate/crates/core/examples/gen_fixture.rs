//! Regenerates the synthetic 2016-2020 market panel under
//! `fixtures/market-2016-2020/`.
//!
//!     cargo run -p stabkit --example gen_fixture [out_dir]

use std::path::PathBuf;

use stabkit::fixture::{synthetic_market, write_csvs, FIXTURE_SEED};

fn main() -> stabkit::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/market-2016-2020"));
    let series = synthetic_market(FIXTURE_SEED);
    write_csvs(&series, &dir)?;
    for s in &series {
        println!("{:<8} {} rows", s.asset(), s.len());
    }
    println!("wrote {}", dir.display());
    Ok(())
}
