use stabkit::fixture::{synthetic_market, FIXTURE_SEED};
use stabkit::ingest::{align_panel, to_returns, AlignPolicy, AlignedPanel, AssetId};
use stabkit::lowfreq::low_frequency;
use stabkit::similarity::{correlation_matrix, dtw_matrix, DtwOptions, FilterState};
use stabkit::spectral::psd;
use stabkit::structural::KEY_ASSETS;

fn panel() -> AlignedPanel {
    let returns: Vec<_> = synthetic_market(FIXTURE_SEED).iter().map(|p| to_returns(p, 365.0).unwrap()).collect();
    align_panel(&returns, AlignPolicy::Intersect).unwrap()
}

/// Column sums and cross products, the way a spreadsheet CORREL would do it.
fn spreadsheet_correl(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[test]
fn correlation_2020_matches_spreadsheet() {
    let p = panel().year(2020);
    let m = correlation_matrix(&p, "2020", FilterState::Pre).unwrap();
    for (i, a) in p.assets().iter().enumerate() {
        for (j, b) in p.assets().iter().enumerate() {
            let want = spreadsheet_correl(p.column(a).unwrap(), p.column(b).unwrap());
            let got = m.values[i][j].unwrap();
            assert!((got - want).abs() <= 1e-12, "{a}/{b}: {got} vs {want}");
        }
    }
}

#[test]
fn yearly_dtw_is_normalized_by_key_assets() {
    let p = panel().year(2018);
    let keys: Vec<AssetId> = KEY_ASSETS.iter().map(|&a| AssetId::new(a)).collect();
    let m = dtw_matrix(&p, &keys, "2018", FilterState::Pre, DtwOptions::default()).unwrap();
    let k = m.assets.len();
    let mut key_max = 0.0f64;
    for i in 0..k {
        assert_eq!(m.values[i][i], 0.0);
        for j in 0..k {
            assert_eq!(m.values[i][j], m.values[j][i]);
            if keys.contains(&m.assets[i]) && keys.contains(&m.assets[j]) {
                key_max = key_max.max(m.values[i][j]);
            }
        }
    }
    assert_eq!(key_max, 1.0);
    // Crypto returns are far more volatile than the key assets.
    let btc = m.assets.iter().position(|a| a.as_str() == "BTC").unwrap();
    let gold = m.assets.iter().position(|a| a.as_str() == "GOLD").unwrap();
    assert!(m.values[btc][gold] > 1.0);
}

#[test]
fn spectrum_and_filter_sizes_on_the_panel() {
    let returns: Vec<_> = synthetic_market(FIXTURE_SEED).iter().map(|p| to_returns(p, 365.0).unwrap()).collect();
    let msci = returns.iter().find(|r| r.asset().as_str() == "MSCI").unwrap();
    assert_eq!(msci.len(), 1258);
    let d = psd(msci.values(), 100.0).unwrap();
    assert!((d.duration() - 1.258e5).abs() < 1e-6);
    assert!((d.base_frequency() - 7.949e-6).abs() < 1e-9);
    assert_eq!(d.one_sided().count(), 629);

    let (filtered, spec) = low_frequency(msci.values(), None).unwrap();
    assert_eq!(spec.q, 128);
    assert_eq!(filtered.len(), 1258);
    let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    assert!(energy(&filtered) < energy(msci.values()));
}
