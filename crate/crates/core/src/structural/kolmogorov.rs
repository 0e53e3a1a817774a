//! Distribution of `sup_t |B(t)|` for a Brownian bridge `B`.

use std::f64::consts::PI;

const TERM_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 1000;
// Below this the alternating series converges slowly; switch to the theta-function form.
const SMALL_X: f64 = 1.0;

/// `P(sup |B| <= x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
///
/// For `x < 1` the equivalent `sqrt(2 pi)/x sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))`
/// is summed instead, since the alternating terms decay slowly there.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    let p = if x < SMALL_X {
        let mut sum = 0.0;
        for k in 1..=MAX_TERMS {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * PI * PI / (8.0 * x * x)).exp();
            sum += term;
            if term < TERM_TOL {
                break;
            }
        }
        (2.0 * PI).sqrt() / x * sum
    } else {
        let mut sum = 0.0;
        for k in 1..=MAX_TERMS {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < TERM_TOL {
                break;
            }
        }
        1.0 - 2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

/// Level `nu` with `kolmogorov_cdf(nu) = confidence`, by bisection.
pub fn critical_value(confidence: f64) -> crate::Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(crate::Error::Domain(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let (mut lo, mut hi) = (0.0, 10.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_values() {
        assert_eq!(kolmogorov_cdf(0.0), 0.0);
        assert!((kolmogorov_cdf(1.358) - 0.95).abs() < 1e-3);
        assert!((kolmogorov_cdf(10.0) - 1.0).abs() < 1e-12);
        // Closed forms agree where both converge quickly.
        let x = 1.0 - 1e-12;
        assert!((kolmogorov_cdf(x) - kolmogorov_cdf(1.0)).abs() < 1e-11);
    }

    #[test]
    fn branches_agree_across_cutover() {
        // Evaluate the alternating series directly at points below the cutover.
        for &x in &[0.6, 0.8, 0.95] {
            let series: f64 = (1..200)
                .map(|k| {
                    let kf = k as f64;
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s * (-2.0 * kf * kf * x * x).exp()
                })
                .sum();
            assert!((kolmogorov_cdf(x) - (1.0 - 2.0 * series)).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn critical_values() {
        let nu95 = critical_value(0.95).unwrap();
        assert!((nu95 - 1.358).abs() < 1e-3);
        assert!(critical_value(0.99).unwrap() > nu95);
        for p in [0.9, 0.95, 0.99] {
            assert!((kolmogorov_cdf(critical_value(p).unwrap()) - p).abs() < 1e-8);
        }
        assert!(critical_value(1.0).is_err());
        assert!(critical_value(0.0).is_err());
    }

    #[test]
    fn monotone_into_unit_interval() {
        let mut prev = 0.0;
        for i in 0..=600 {
            let v = kolmogorov_cdf(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
    }
}
