use serde::Serialize;

use super::orbit::{advance, burn_in_start, Orbit};
use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};
use crate::io::csv_table;
use crate::maps::{sup_distance, Dynamics, Point, SkewProductMap};
use crate::par::Exec;
use crate::rng;

/// Visits the largest ball needs before any slope is reported.
pub const MIN_LARGEST_BALL: usize = 1000;
/// Visits a ball needs to enter the fit.
pub const MIN_BALL_VISITS: usize = 30;
/// Radii a fit needs.
const MIN_RADII: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub point: Point,
    pub radii: Vec<f64>,
    pub visits: Vec<usize>,
    /// Visit frequency `μ̂(B_r)` per radius.
    pub ball_masses: Vec<f64>,
    /// Radii with too few visits to enter the fit.
    pub excluded: Vec<f64>,
    pub fit: LineFit,
    pub slope: f64,
    pub formula_value: Option<f64>,
}

impl DimensionReport {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["r", "mass"],
            self.radii
                .iter()
                .zip(&self.ball_masses)
                .map(|(&r, &m)| vec![r, m]),
        )
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "r2": self.fit.r_squared,
            "excluded_radii": self.excluded,
            "formula": self.formula_value,
        })
    }
}

/// `|Δx|` when `dim == 1`, the sup metric otherwise.
fn metric(dim: usize) -> fn(Point, Point) -> f64 {
    if dim == 1 {
        |a, b| (a[0] - b[0]).abs()
    } else {
        sup_distance
    }
}

pub fn local_dimension(
    points: &[Point],
    x0: Point,
    radii: &[f64],
    dim: usize,
) -> Result<DimensionReport> {
    local_dimension_with(points, x0, radii, dim, Exec::default())
}

/// Slope of `log μ̂(B_r(x₀))` against `log r` over the radii whose balls
/// hold at least [`MIN_BALL_VISITS`] points. `radii` must decrease.
pub fn local_dimension_with(
    points: &[Point],
    x0: Point,
    radii: &[f64],
    dim: usize,
    exec: Exec,
) -> Result<DimensionReport> {
    check_radii(radii)?;
    let dist = metric(dim);
    const CHUNK: usize = 1 << 16;
    let chunks = points.len().div_ceil(CHUNK);
    let partial = exec.map(chunks, |c| {
        let mut h = vec![0usize; radii.len() + 1];
        for &p in &points[c * CHUNK..((c + 1) * CHUNK).min(points.len())] {
            let d = dist(p, x0);
            h[radii.partition_point(|&r| r > d)] += 1;
        }
        h
    });
    let mut h = vec![0usize; radii.len() + 1];
    for part in partial {
        h.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    // visits[j] = #{d < r_j} = Σ_{k > j} h[k]
    let mut visits = vec![0usize; radii.len()];
    let mut acc = 0;
    for j in (0..radii.len()).rev() {
        acc += h[j + 1];
        visits[j] = acc;
    }
    fit_visits(x0, radii, visits, points.len().max(1) as f64)
}

/// Long-orbit settings for [`local_dimension_streamed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamedConfig {
    /// Total steps, split evenly across chains; the orbit is not stored.
    pub steps: u64,
    /// Independent orbits, each with its own stream.
    pub chains: usize,
    pub burn_in: usize,
    pub jitter: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for StreamedConfig {
    fn default() -> Self {
        Self {
            steps: 200_000_000,
            chains: 8,
            burn_in: 10_000,
            jitter: super::DEFAULT_JITTER,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

/// [`local_dimension`] at several targets from visit counts accumulated
/// along long orbits.
pub fn local_dimension_streamed<D: Dynamics + ?Sized>(
    map: &D,
    targets: &[Point],
    radii: &[f64],
    cfg: StreamedConfig,
) -> Result<Vec<Result<DimensionReport>>> {
    check_radii(radii)?;
    let chains = cfg.chains.max(1);
    let per_chain = cfg.steps / chains as u64;
    let partial = cfg.exec.map(chains, |c| {
        let mut rng = rng::stream(cfg.seed, c as u64 + 1);
        let mut nudged = 0;
        let mut p = burn_in_start(map, cfg.burn_in, cfg.jitter, &mut rng);
        let mut h = vec![vec![0u64; radii.len() + 1]; targets.len()];
        for _ in 0..per_chain {
            p = advance(map, p, cfg.jitter, &mut rng, &mut nudged);
            for (t, row) in targets.iter().zip(h.iter_mut()) {
                row[radii.partition_point(|&r| r > map.distance(p, *t))] += 1;
            }
        }
        h
    });
    let total = (per_chain * chains as u64) as f64;
    Ok((0..targets.len())
        .map(|t| {
            let mut visits = vec![0usize; radii.len()];
            let mut acc = 0u64;
            for j in (0..radii.len()).rev() {
                acc += partial.iter().map(|h| h[t][j + 1]).sum::<u64>();
                visits[j] = acc as usize;
            }
            fit_visits(targets[t], radii, visits, total)
        })
        .collect())
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii[radii.len() - 1] <= 0.0 {
        return Err(Error::InvalidParams(
            "radii must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn fit_visits(x0: Point, radii: &[f64], visits: Vec<usize>, total: f64) -> Result<DimensionReport> {
    let ball_masses: Vec<f64> = visits.iter().map(|&v| v as f64 / total).collect();
    if visits[0] < MIN_LARGEST_BALL {
        return Err(Error::SparseBall {
            excluded: radii.to_vec(),
        });
    }
    let excluded: Vec<f64> = radii
        .iter()
        .zip(&visits)
        .filter(|(_, &v)| v < MIN_BALL_VISITS)
        .map(|(&r, _)| r)
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&ball_masses)
        .zip(&visits)
        .filter(|(_, &v)| v >= MIN_BALL_VISITS)
        .map(|((&r, &m), _)| (r.ln(), m.ln()))
        .unzip();
    if xs.len() < MIN_RADII {
        return Err(Error::SparseBall { excluded });
    }
    let fit = line_fit(&xs, &ys).ok_or_else(|| Error::SparseBall {
        excluded: excluded.clone(),
    })?;
    Ok(DimensionReport {
        point: x0,
        radii: radii.to_vec(),
        visits,
        ball_masses,
        excluded,
        slope: fit.slope,
        fit,
        formula_value: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormulaReport {
    /// `1 + Ψ̂/Φ̂`.
    pub value: f64,
    /// Birkhoff mean of `log|T'|`.
    pub psi: f64,
    /// Birkhoff mean of `-log|∂_y G|`.
    pub phi: f64,
    /// `|value - value over the first three quarters|`.
    pub drift: f64,
}

/// `h(1/Ψ̂ + 1/Φ̂)` with the entropy `h = Ψ̂`, i.e. `1 + Ψ̂/Φ̂`.
pub fn dimension_formula(map: &SkewProductMap, orbit: &Orbit) -> Result<FormulaReport> {
    let mut psi = Vec::with_capacity(orbit.len());
    let mut phi = Vec::with_capacity(orbit.len());
    for (step, &[x, y]) in orbit.points.iter().enumerate() {
        let (Ok(dt), Ok(dg)) = (map.base().derivative(x), map.fiber_dy(x, y)) else {
            continue;
        };
        if dg.abs() < 1e-300 {
            return Err(Error::DegenerateFiber { value: dg, step });
        }
        psi.push(dt.abs().ln());
        phi.push(-dg.abs().ln());
    }
    if psi.is_empty() {
        return Err(Error::InvalidParams("orbit has no regular points".into()));
    }
    let ratio = |k: usize| {
        let s: f64 = psi[..k].iter().sum();
        let t: f64 = phi[..k].iter().sum();
        1.0 + s / t
    };
    let k = psi.len();
    let value = ratio(k);
    let drift = (value - ratio((3 * k / 4).max(1))).abs();
    Ok(FormulaReport {
        value,
        psi: psi.iter().sum::<f64>() / k as f64,
        phi: phi.iter().sum::<f64>() / k as f64,
        drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirkhoffStat {
    pub mean: f64,
    /// `|mean - mean of the first three quarters| / |mean|`.
    pub drift: f64,
    pub max_summand: f64,
    /// `drift < 1%`.
    pub converged: bool,
    /// `max summand > 10 · |mean| · log(length)`.
    pub heavy_tail: bool,
}

impl BirkhoffStat {
    fn new(values: &[f64]) -> Self {
        let n = values.len().max(1);
        let mean = values.iter().sum::<f64>() / n as f64;
        let head = (3 * n / 4).max(1).min(values.len().max(1));
        let head_mean = values[..head.min(values.len())].iter().sum::<f64>() / head as f64;
        let drift = if mean != 0.0 {
            ((mean - head_mean) / mean).abs()
        } else {
            (mean - head_mean).abs()
        };
        let max_summand = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            mean,
            drift,
            max_summand,
            converged: drift < 0.01,
            heavy_tail: max_summand > 10.0 * mean.abs() * (n as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub log_expansion: BirkhoffStat,
    pub log_contraction: BirkhoffStat,
    pub roof: Option<BirkhoffStat>,
}

/// Birkhoff means of `log|T'|`, `-log|∂_y G|` and optionally a roof
/// function of the base point, with drift and tail diagnostics.
pub fn integrability_report(
    map: &SkewProductMap,
    orbit: &Orbit,
    roof: Option<&dyn Fn(f64) -> f64>,
) -> IntegrabilityReport {
    let mut psi = Vec::with_capacity(orbit.len());
    let mut phi = Vec::with_capacity(orbit.len());
    let mut tau = Vec::new();
    for &[x, y] in &orbit.points {
        if let (Ok(dt), Ok(dg)) = (map.base().derivative(x), map.fiber_dy(x, y)) {
            psi.push(dt.abs().ln());
            phi.push(-dg.abs().ln());
        }
        if let Some(r) = roof {
            let v = r(x);
            if v.is_finite() {
                tau.push(v);
            }
        }
    }
    IntegrabilityReport {
        log_expansion: BirkhoffStat::new(&psi),
        log_contraction: BirkhoffStat::new(&phi),
        roof: roof.map(|_| BirkhoffStat::new(&tau)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{LorenzModelParams, PiecewiseExpandingMap};
    use crate::rng;
    use crate::stats::{sample_orbit, OrbitConfig, Start};
    use crate::transfer::{invariant_density, ulam_matrix};
    use rand::Rng;

    fn orbit(map: &SkewProductMap, length: usize, seed: u64) -> Orbit {
        let cfg = OrbitConfig {
            length,
            seed,
            ..Default::default()
        };
        sample_orbit(map, Start::Random, cfg).unwrap()
    }

    fn radii(r0: f64, count: usize) -> Vec<f64> {
        (0..count).map(|k| r0 * 0.5f64.powi(k as i32)).collect()
    }

    #[test]
    fn doubling_orbit_is_one_dimensional() {
        let t = PiecewiseExpandingMap::doubling();
        let o = sample_orbit(
            &t,
            Start::Random,
            OrbitConfig {
                length: 1_000_000,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let rep = local_dimension(&o.points, [0.37, 0.0], &radii(0.1, 8), 1).unwrap();
        assert!((rep.slope - 1.0).abs() < 0.1, "{}", rep.slope);
    }

    #[test]
    fn uniform_cloud_is_two_dimensional() {
        let mut r = rng::stream(5, 0);
        let cloud: Vec<Point> = (0..1_000_000).map(|_| [r.random(), r.random()]).collect();
        let rep = local_dimension(&cloud, [0.5, 0.5], &radii(0.2, 7), 2).unwrap();
        assert!((rep.slope - 2.0).abs() < 0.1, "{}", rep.slope);
    }

    #[test]
    fn streamed_counts_are_deterministic() {
        let t = PiecewiseExpandingMap::doubling();
        let targets = [[0.37, 0.0], [0.81, 0.0]];
        let cfg = StreamedConfig {
            steps: 2_000_000,
            chains: 4,
            seed: 8,
            ..Default::default()
        };
        let par = local_dimension_streamed(&t, &targets, &radii(0.1, 8), cfg).unwrap();
        let seq_cfg = StreamedConfig {
            exec: Exec::Sequential,
            ..cfg
        };
        let seq = local_dimension_streamed(&t, &targets, &radii(0.1, 8), seq_cfg).unwrap();
        for (a, b) in par.into_iter().zip(seq) {
            let (a, b) = (a.unwrap(), b.unwrap());
            assert_eq!(a.visits, b.visits);
            assert!((a.slope - 1.0).abs() < 0.1, "{}", a.slope);
            assert!((a.ball_masses[0] - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn sparse_balls_are_reported() {
        let cloud: Vec<Point> = (0..500).map(|i| [i as f64 / 500.0, 0.5]).collect();
        assert!(matches!(
            local_dimension(&cloud, [0.5, 0.5], &radii(0.1, 6), 2),
            Err(Error::SparseBall { .. })
        ));
        let cloud: Vec<Point> = (0..1250).map(|i| [i as f64 / 1250.0, 0.5]).collect();
        let quartered: Vec<f64> = (0..6).map(|k| 0.4 * 0.25f64.powi(k)).collect();
        match local_dimension(&cloud, [0.5, 0.5], &quartered, 2) {
            Err(Error::SparseBall { excluded }) => assert!(!excluded.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn formula_on_affine_skews() {
        let f = SkewProductMap::affine_doubling(1.0 / 3.0).unwrap();
        let rep = dimension_formula(&f, &orbit(&f, 10_000, 1)).unwrap();
        let exact = 1.0 + 2f64.ln() / 3f64.ln();
        assert!((rep.value - exact).abs() < 1e-12 && rep.drift < 1e-12);
        assert!((rep.value - (1.0 + rep.psi / rep.phi)).abs() < 1e-15);
        let half = SkewProductMap::affine_doubling(0.5).unwrap();
        let rep = dimension_formula(&half, &orbit(&half, 10_000, 1)).unwrap();
        assert!((rep.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lorenz_formula_in_range() {
        let f = SkewProductMap::lorenz(LorenzModelParams::default()).unwrap();
        let rep = dimension_formula(&f, &orbit(&f, 1_000_000, 3)).unwrap();
        assert!(rep.value > 1.0 && rep.value < 2.0, "{}", rep.value);
        assert!(rep.drift < 1e-2);
    }

    #[test]
    fn integrability_affine_and_lorenz() {
        let f = SkewProductMap::affine_doubling(1.0 / 3.0).unwrap();
        let rep = integrability_report(&f, &orbit(&f, 10_000, 1), Some(&|_| 2.5));
        assert!((rep.log_expansion.mean - 2f64.ln()).abs() < 1e-12);
        assert!((rep.log_contraction.mean - 3f64.ln()).abs() < 1e-12);
        assert!((rep.roof.unwrap().mean - 2.5).abs() < 1e-12);

        let f = SkewProductMap::lorenz(LorenzModelParams::default()).unwrap();
        let lambda1 = 1.0;
        let roof = move |x: f64| -(x - 0.5).abs().ln() / lambda1;
        let rep = integrability_report(&f, &orbit(&f, 2_000_000, 7), Some(&roof));
        assert!(rep.log_expansion.mean > 0.0 && rep.log_expansion.converged);
        let r = rep.roof.unwrap();
        assert!(r.converged);
        // ∫ -log|x - 1/2| h(x) dx with the exact per-bin integral of the log
        let n = 1024;
        let h = invariant_density(&ulam_matrix(f.base(), n), 1e-13, 10_000).unwrap();
        let prim = |u: f64| if u == 0.0 { 0.0 } else { u * u.abs().ln() - u };
        let expected: f64 = (0..n)
            .map(|i| {
                let (a, b) = (i as f64 / n as f64 - 0.5, (i + 1) as f64 / n as f64 - 0.5);
                h.invariant_density.values()[i] * (prim(a) - prim(b))
            })
            .sum::<f64>()
            / lambda1;
        assert!(
            (r.mean - expected).abs() < 0.02 * expected,
            "{} vs {expected}",
            r.mean
        );
    }
}
