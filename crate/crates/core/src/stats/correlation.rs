use serde::Serialize;

use super::orbit::Orbit;
use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};
use crate::io::csv_table;
use crate::observable::Observable2D;
use crate::par::Exec;

/// Orbit length per lag below which the estimator is refused.
const MIN_LENGTH_PER_LAG: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySeries {
    pub lags: Vec<usize>,
    /// `Ĉ_n` per lag.
    pub correlations: Vec<f64>,
    /// `3·std(f·g)/√M`.
    pub noise_floor: f64,
    /// Lags used by the fit: `1..` up to the first one at or below the floor.
    pub window: Vec<usize>,
    pub fit: Option<LineFit>,
    pub fitted_rate: Option<f64>,
    pub r_squared: Option<f64>,
}

impl DecaySeries {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["lag", "correlation"],
            self.lags
                .iter()
                .zip(&self.correlations)
                .map(|(&n, &c)| vec![n as f64, c]),
        )
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rate": self.fitted_rate,
            "r2": self.r_squared,
            "noise_floor": self.noise_floor,
            "window": self.window,
        })
    }
}

pub fn correlation_series(
    f: &Observable2D,
    g: &Observable2D,
    orbit: &Orbit,
    max_lag: usize,
) -> Result<DecaySeries> {
    correlation_series_with(f, g, orbit, max_lag, Exec::default())
}

/// `Ĉ_n = |(1/M) Σ_k f(p_k) g(p_{k+n}) - f̄ ḡ_n|` for `n = 0..=max_lag`,
/// with `M = len - max_lag` and both means over the windows actually used.
pub fn correlation_series_with(
    f: &Observable2D,
    g: &Observable2D,
    orbit: &Orbit,
    max_lag: usize,
    exec: Exec,
) -> Result<DecaySeries> {
    let len = orbit.len();
    if len <= max_lag || len - max_lag < MIN_LENGTH_PER_LAG * max_lag.max(1) {
        return Err(Error::InsufficientOrbit { len, max_lag });
    }
    let m = len - max_lag;
    let fv = exec.map_slice(&orbit.points, |&p| f.at(p));
    let gv = exec.map_slice(&orbit.points, |&p| g.at(p));
    let fw = &fv[..m];
    let f_mean = fw.iter().sum::<f64>() / m as f64;
    let correlations = exec.map(max_lag + 1, |n| {
        let gw = &gv[n..n + m];
        let g_mean = gw.iter().sum::<f64>() / m as f64;
        let cross = fw.iter().zip(gw).map(|(a, b)| a * b).sum::<f64>() / m as f64;
        (cross - f_mean * g_mean).abs()
    });
    let prod_mean = fw.iter().zip(&gv[..m]).map(|(a, b)| a * b).sum::<f64>() / m as f64;
    let prod_var = fw
        .iter()
        .zip(&gv[..m])
        .map(|(a, b)| (a * b - prod_mean).powi(2))
        .sum::<f64>()
        / m as f64;
    let noise_floor = 3.0 * prod_var.sqrt() / (m as f64).sqrt();
    let window: Vec<usize> = (1..=max_lag)
        .take_while(|&n| correlations[n] > noise_floor && correlations[n].is_finite())
        .collect();
    let xs: Vec<f64> = window.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = window.iter().map(|&n| correlations[n].ln()).collect();
    let fit = line_fit(&xs, &ys);
    Ok(DecaySeries {
        lags: (0..=max_lag).collect(),
        correlations,
        noise_floor,
        window,
        fitted_rate: fit.map(|l| l.slope.exp()),
        r_squared: fit.map(|l| l.r_squared),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::SkewProductMap;
    use crate::stats::{sample_orbit, OrbitConfig, Start};

    fn affine_orbit(length: usize) -> Orbit {
        let f = SkewProductMap::affine_doubling(1.0 / 3.0).unwrap();
        let cfg = OrbitConfig {
            length,
            seed: 3,
            ..Default::default()
        };
        sample_orbit(&f, Start::Random, cfg).unwrap()
    }

    #[test]
    fn constant_observable_has_no_correlation() {
        let o = affine_orbit(200_000);
        let c = Observable2D::new(|_, _| 2.0);
        let g = Observable2D::new(|x, y| x * y);
        let s = correlation_series(&c, &g, &o, 10).unwrap();
        let bound = 1.0 / (o.len() as f64).sqrt();
        assert!(s.correlations.iter().all(|&v| v <= bound));
        assert!(s.fitted_rate.is_none());
    }

    #[test]
    fn identity_observable_decays_at_one_half() {
        let o = affine_orbit(2_000_000);
        let x = Observable2D::new(|x, _| x);
        let s = correlation_series(&x, &x, &o, 20).unwrap();
        // exact value 2^-n / 12
        for n in 0..5 {
            let exact = 0.5f64.powi(n) / 12.0;
            assert!((s.correlations[n as usize] - exact).abs() < 3e-3, "lag {n}");
        }
        let rate = s.fitted_rate.unwrap();
        assert!((0.4..0.6).contains(&rate), "{rate}");
    }

    #[test]
    fn swap_symmetry() {
        let o = affine_orbit(500_000);
        let f = Observable2D::new(|x, y| (x - 0.3).abs() + y);
        let g = Observable2D::new(|x, y| x * x - y);
        let a = correlation_series(&f, &g, &o, 8).unwrap();
        let b = correlation_series(&g, &f, &o, 8).unwrap();
        // stationarity: Cov(f, g∘Fⁿ) vs Cov(g, f∘Fⁿ) differ in general, lag 0 agrees
        assert!((a.correlations[0] - b.correlations[0]).abs() < 1e-12);
    }

    #[test]
    fn short_orbit_is_rejected() {
        let o = affine_orbit(1000);
        let x = Observable2D::new(|x, _| x);
        assert!(matches!(
            correlation_series(&x, &x, &o, 40),
            Err(Error::InsufficientOrbit { .. })
        ));
    }
}
