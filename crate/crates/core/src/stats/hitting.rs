use serde::Serialize;

use super::orbit::{advance, burn_in_start};
use crate::error::{Error, Result};
use crate::fit::{line_fit, median, LineFit};
use crate::io::csv_table;
use crate::maps::{Dynamics, Point};
use crate::par::Exec;
use crate::rng;

/// A radius is dropped when more than this fraction of samples miss it.
pub const MAX_MISSING_FRACTION: f64 = 0.2;

/// `r_k = r_max · ratio^k` for `k = 0..count`.
pub fn geometric_radii(r_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r_max * ratio.powi(k as i32)).collect()
}

/// Smallest `n ≥ 1` with `Fⁿ(x)` in the open ball `B_r(x₀)`, on the exact
/// (unperturbed) orbit.
pub fn hitting_time<D: Dynamics + ?Sized>(
    map: &D,
    x: Point,
    x0: Point,
    r: f64,
    horizon: u64,
) -> Result<u64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius {r} must be positive")));
    }
    let mut rng = rng::stream(0, 0);
    let mut nudged = 0;
    let mut p = x;
    for n in 1..=horizon {
        p = advance(map, p, 0.0, &mut rng, &mut nudged);
        if map.distance(p, x0) < r {
            return Ok(n);
        }
    }
    Err(Error::NotHit {
        horizon: horizon as f64,
    })
}

/// First entrance times into every ball `B_{r_k}(x₀)` along one orbit;
/// `radii` must be decreasing. Each step adds the base jitter.
pub fn first_hits<D: Dynamics + ?Sized>(
    map: &D,
    start: Point,
    x0: Point,
    radii: &[f64],
    horizon: u64,
    jitter: f64,
    rng: &mut rng::Stream,
) -> Vec<Option<u64>> {
    let mut hits = vec![None; radii.len()];
    let mut next = 0;
    let mut nudged = 0;
    let mut p = start;
    for n in 1..=horizon {
        if next == radii.len() {
            break;
        }
        p = advance(map, p, jitter, rng, &mut nudged);
        let d = map.distance(p, x0);
        while next < radii.len() && d < radii[next] {
            hits[next] = Some(n);
            next += 1;
        }
    }
    hits
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoglawConfig {
    pub samples: usize,
    pub horizon: u64,
    pub burn_in: usize,
    pub jitter: f64,
    pub seed: u64,
    pub exec: crate::par::Exec,
}

impl Default for LoglawConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            horizon: 100_000_000,
            burn_in: 10_000,
            jitter: super::DEFAULT_JITTER,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoglawReport {
    pub target: Point,
    pub radii: Vec<f64>,
    /// Median of `log τ` per radius; `NaN` where the radius was dropped.
    pub log_tau_median: Vec<f64>,
    pub missing_fraction: Vec<f64>,
    pub dropped_radii: Vec<f64>,
    pub fit: LineFit,
    pub slope: f64,
    /// `log τ / (-log r)` per sample at the smallest kept radius (`NaN` when
    /// the sample missed it).
    pub smallest_radius_ratios: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LoglawReport {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["r", "log_tau_median", "missing_fraction"],
            (0..self.radii.len()).map(|k| {
                vec![
                    self.radii[k],
                    self.log_tau_median[k],
                    self.missing_fraction[k],
                ]
            }),
        )
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "r2": self.fit.r_squared,
            "dropped_radii": self.dropped_radii,
            "warnings": self.warnings,
        })
    }

    /// Fraction of samples with `log τ/(-log r) ≥ d - margin` at the smallest
    /// kept radius.
    pub fn lower_bound_fraction(&self, d: f64, margin: f64) -> f64 {
        let n = self.smallest_radius_ratios.len().max(1);
        self.smallest_radius_ratios
            .iter()
            .filter(|&&q| q >= d - margin)
            .count() as f64
            / n as f64
    }
}

pub fn loglaw_exponent<D: Dynamics + ?Sized>(
    map: &D,
    x0: Point,
    radii: &[f64],
    samples: usize,
    horizon: u64,
    seed: u64,
) -> Result<LoglawReport> {
    loglaw_exponent_with(
        map,
        x0,
        radii,
        LoglawConfig {
            samples,
            horizon,
            seed,
            ..Default::default()
        },
    )
}

/// Slope of the per-radius median of `log τ` against `-log r`, over
/// `samples` starts drawn uniformly and pushed through `burn_in` steps.
pub fn loglaw_exponent_with<D: Dynamics + ?Sized>(
    map: &D,
    x0: Point,
    radii: &[f64],
    cfg: LoglawConfig,
) -> Result<LoglawReport> {
    if radii.len() < 5 {
        return Err(Error::InvalidParams("need at least 5 radii".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParams(
            "radii must be positive and decreasing".into(),
        ));
    }
    if cfg.samples < 100 {
        return Err(Error::InvalidParams("need at least 100 samples".into()));
    }
    let hits = cfg.exec.map(cfg.samples, |i| {
        let mut rng = rng::stream(cfg.seed, i as u64 + 1);
        let p = burn_in_start(map, cfg.burn_in, cfg.jitter, &mut rng);
        first_hits(map, p, x0, radii, cfg.horizon, cfg.jitter, &mut rng)
    });
    let mut log_tau_median = Vec::with_capacity(radii.len());
    let mut missing_fraction = Vec::with_capacity(radii.len());
    let mut dropped_radii = Vec::new();
    let mut warnings = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut smallest_kept = None;
    for (k, &r) in radii.iter().enumerate() {
        // missing samples sort as +∞
        let logs: Vec<f64> = hits
            .iter()
            .map(|h| h[k].map_or(f64::INFINITY, |t| (t as f64).ln()))
            .collect();
        let missing = logs.iter().filter(|v| v.is_infinite()).count() as f64 / logs.len() as f64;
        missing_fraction.push(missing);
        if r >= 1.0 {
            dropped_radii.push(r);
            warnings.push(format!("radius {r} covers the whole space"));
            log_tau_median.push(f64::NAN);
            continue;
        }
        if missing > MAX_MISSING_FRACTION {
            dropped_radii.push(r);
            warnings.push(format!(
                "radius {r}: {:.1}% of samples missed within the horizon",
                100.0 * missing
            ));
            log_tau_median.push(f64::NAN);
            continue;
        }
        let med = median(&logs).expect("samples nonempty");
        log_tau_median.push(med);
        xs.push(-r.ln());
        ys.push(med);
        smallest_kept = Some(k);
    }
    let Some(k_small) = smallest_kept else {
        return Err(Error::AllMissing);
    };
    let fit = line_fit(&xs, &ys).ok_or(Error::AllMissing)?;
    let minus_log_r = -radii[k_small].ln();
    let smallest_radius_ratios = hits
        .iter()
        .map(|h| h[k_small].map_or(f64::NAN, |t| (t as f64).ln() / minus_log_r))
        .collect();
    Ok(LoglawReport {
        target: x0,
        radii: radii.to_vec(),
        log_tau_median,
        missing_fraction,
        dropped_radii,
        slope: fit.slope,
        fit,
        smallest_radius_ratios,
        warnings,
    })
}
