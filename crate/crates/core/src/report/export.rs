//! CSV encoders for pipeline artifacts. Floats use Rust's shortest
//! round-trip formatting so reruns are byte-identical.

use chrono::NaiveDate;

use crate::error::Result;
use crate::ingest::AssetId;
use crate::similarity::{CorrelationMatrix, DtwMatrix};
use crate::spectral::SpectrumDensity;

use super::pipeline::{CusumRun, DtwAlignment, FilteredRecord, StatsRow};

pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn encode<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
}

pub fn stats_csv(rows: &[StatsRow]) -> Result<Vec<u8>> {
    encode(&["asset", "variant", "n", "mean", "sd", "min", "max", "skewness", "kurtosis", "degenerate"], |w| {
        for r in rows {
            let s = &r.summary;
            w.write_record([
                r.asset.as_str(),
                &r.variant,
                &s.n.to_string(),
                &num(s.mean),
                &num(s.sd),
                &num(s.min),
                &num(s.max),
                &opt(s.skewness),
                &opt(s.kurtosis),
                if s.degenerate { "true" } else { "false" },
            ])?;
        }
        Ok(())
    })
}

pub fn moving_average_csv(series: &[(AssetId, Vec<NaiveDate>, Vec<f64>)]) -> Result<Vec<u8>> {
    encode(&["asset", "date", "value"], |w| {
        for (asset, dates, values) in series {
            for (d, v) in dates.iter().zip(values) {
                w.write_record([asset.as_str(), &d.to_string(), &num(*v)])?;
            }
        }
        Ok(())
    })
}

/// One-sided spectrum, `k = 1..=n/2`.
pub fn spectrum_csv(density: &SpectrumDensity) -> Result<Vec<u8>> {
    encode(&["frequency", "density"], |w| {
        for (f, p) in density.one_sided() {
            w.write_record([num(f), num(p)])?;
        }
        Ok(())
    })
}

pub fn filtered_csv(rec: &FilteredRecord) -> Result<Vec<u8>> {
    encode(&["date", "raw_return", "filtered_return"], |w| {
        for ((d, r), f) in rec.dates.iter().zip(&rec.raw).zip(&rec.filtered) {
            w.write_record([d.to_string(), num(*r), num(*f)])?;
        }
        Ok(())
    })
}

fn matrix_csv<T>(assets: &[AssetId], values: &[Vec<T>], cell: impl Fn(&T) -> String) -> Result<Vec<u8>> {
    let mut header = vec![""];
    header.extend(assets.iter().map(AssetId::as_str));
    encode(&header, |w| {
        for (a, row) in assets.iter().zip(values) {
            let mut rec = vec![a.to_string()];
            rec.extend(row.iter().map(&cell));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn correlation_csv(m: &CorrelationMatrix) -> Result<Vec<u8>> {
    matrix_csv(&m.assets, &m.values, |v| opt(*v))
}

/// Normalized distances.
pub fn dtw_csv(m: &DtwMatrix) -> Result<Vec<u8>> {
    matrix_csv(&m.assets, &m.values, |v| num(*v))
}

/// Path and boundaries on a shared grid; each boundary gets an upper and lower column.
pub fn cusum_csv(run: &CusumRun) -> Result<Vec<u8>> {
    let mut header = vec!["tau".to_string(), "w".to_string()];
    for o in &run.outcomes {
        header.push(format!("{}_upper", o.boundary.kind.as_str()));
        header.push(format!("{}_lower", o.boundary.kind.as_str()));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    encode(&header, |w| {
        for (i, (t, v)) in run.path.taus.iter().zip(&run.path.values).enumerate() {
            let mut rec = vec![num(*t), num(*v)];
            for o in &run.outcomes {
                rec.push(num(o.boundary.values[i]));
                rec.push(num(-o.boundary.values[i]));
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn alignment_csv(a: &DtwAlignment) -> Result<Vec<u8>> {
    encode(&["i", "j", "date_x", "date_y", "x", "y"], |w| {
        for &(i, j) in &a.path {
            w.write_record([
                i.to_string(),
                j.to_string(),
                a.dates[i].to_string(),
                a.dates[j].to_string(),
                num(a.x_values[i]),
                num(a.y_values[j]),
            ])?;
        }
        Ok(())
    })
}
