//! The Perron–Frobenius operator of a piecewise expanding map
//! `Pf(y) = Σ_i f(T_i⁻¹ y) / |T'(T_i⁻¹ y)|`, its Ulam discretization,
//! invariant densities, decay rates and Lasota–Yorke coefficient probes.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};
use crate::io::fmt_f64;
use crate::maps::PiecewiseExpandingMap;
use crate::norms::{dyadic_epsilons, SampledFunction};
use crate::observable::Observable1D;
use crate::par::Exec;
use crate::rng;

/// A density on `[0,1]` sampled on `n` equal bins (value = mass / width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams(
                "density grid needs at least one bin".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParams(
                "density values must be finite and >= 0".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn uniform(bins: usize) -> Self {
        Self {
            values: vec![1.0; bins.max(1)],
        }
    }

    /// Samples `f` at bin midpoints (negative values are clipped).
    pub fn from_fn(bins: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = bins.max(1);
        Self {
            values: (0..n)
                .map(|i| f((i as f64 + 0.5) / n as f64).max(0.0))
                .collect(),
        }
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.bins() as f64
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.bins() as f64
    }

    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        if m > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= m);
        }
        self
    }

    /// `∫ |self - other| dm`.
    pub fn l1_distance(&self, other: &DensityGrid) -> Result<f64> {
        if self.bins() != other.bins() {
            return Err(Error::GridMismatch(format!(
                "{} vs {} bins",
                self.bins(),
                other.bins()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.bins() as f64)
    }

    /// L¹ distance as step functions to a grid with a multiple of the bins.
    pub fn l1_distance_refined(&self, finer: &DensityGrid) -> Result<f64> {
        let (n, m) = (self.bins(), finer.bins());
        if m % n != 0 {
            return Err(Error::GridMismatch(format!("{m} is not a multiple of {n}")));
        }
        let k = m / n;
        Ok(finer
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.values[j / k]).abs())
            .sum::<f64>()
            / m as f64)
    }

    /// Averages groups of bins down to `bins` (which must divide the size).
    pub fn coarsen(&self, bins: usize) -> Result<DensityGrid> {
        let n = self.bins();
        if bins == 0 || !n.is_multiple_of(bins) {
            return Err(Error::GridMismatch(format!("{bins} does not divide {n}")));
        }
        let k = n / bins;
        Ok(DensityGrid {
            values: self
                .values
                .chunks(k)
                .map(|c| c.iter().sum::<f64>() / k as f64)
                .collect(),
        })
    }

    /// Linear interpolation between bin midpoints, extrapolated linearly
    /// past the outer midpoints and clipped at zero.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.bins();
        if n == 1 {
            return self.values[0];
        }
        let t = x * n as f64 - 0.5;
        let i = (t.floor().max(0.0) as usize).min(n - 2);
        let w = t - i as f64;
        ((1.0 - w) * self.values[i] + w * self.values[i + 1]).max(0.0)
    }

    /// `∫ g · self dm` by the midpoint rule.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        (0..self.bins())
            .map(|i| g(self.midpoint(i)) * self.values[i])
            .sum::<f64>()
            / self.bins() as f64
    }

    /// CSV rows `bin_left,density`.
    pub fn to_csv(&self) -> String {
        crate::io::csv_table(
            &["bin_left", "density"],
            (0..self.bins()).map(|i| vec![i as f64 / self.bins() as f64, self.values[i]]),
        )
    }
}

/// `Pf` as a new observable, by summing over branch preimages.
pub fn pf_apply(map: &PiecewiseExpandingMap, f: &Observable1D) -> Observable1D {
    let map = Arc::new(map.clone());
    let f = f.clone();
    Observable1D::new(move |y| {
        map.preimages(y)
            .into_iter()
            .filter(|p| p.expansion.is_finite())
            .map(|p| f.eval(p.x) / p.expansion)
            .sum()
    })
}

/// `Pf` evaluated at bin midpoints, with `f` read off the grid by linear
/// interpolation.
pub fn pf_apply_grid(map: &PiecewiseExpandingMap, f: &DensityGrid) -> DensityGrid {
    pf_apply_grid_with(map, f, Exec::default())
}

pub fn pf_apply_grid_with(map: &PiecewiseExpandingMap, f: &DensityGrid, exec: Exec) -> DensityGrid {
    let values = exec.map(f.bins(), |i| {
        map.preimages(f.midpoint(i))
            .into_iter()
            .filter(|p| p.expansion.is_finite())
            .map(|p| f.interpolate(p.x) / p.expansion)
            .sum::<f64>()
    });
    DensityGrid { values }
}

/// Row-stochastic Ulam matrix `P[i][j] = m(B_i ∩ T⁻¹B_j) / m(B_i)`, stored
/// sparsely by rows and by columns.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamOperator {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

impl UlamOperator {
    /// Builds an operator from explicit rows; each row must be a probability
    /// vector within `1e-12`.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            let s: f64 = row.iter().map(|e| e.1).sum();
            if (s - 1.0).abs() > 1e-12 || row.iter().any(|&(j, v)| j >= n || v < 0.0) {
                return Err(Error::InvalidParams(format!("row {i} is not stochastic")));
            }
        }
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                cols[j].push((i, v));
            }
        }
        Ok(Self { n, rows, cols })
    }

    pub fn bins(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().filter(|e| e.0 == j).map(|e| e.1).sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Row-vector action `v ↦ vP` on bin masses.
    pub fn push(&self, v: &[f64], exec: Exec) -> Vec<f64> {
        exec.map(self.n, |j| {
            self.cols[j].iter().map(|&(i, p)| v[i] * p).sum()
        })
    }

    /// Sparse triplets `row col value`, one per line.
    pub fn to_triplets(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                let _ = writeln!(out, "{i} {j} {}", fmt_f64(v));
            }
        }
        out
    }
}

/// Ulam matrix from exact preimage intervals of each bin.
pub fn ulam_matrix(map: &PiecewiseExpandingMap, n: usize) -> UlamOperator {
    ulam_matrix_with(map, n, Exec::default())
}

pub fn ulam_matrix_with(map: &PiecewiseExpandingMap, n: usize, exec: Exec) -> UlamOperator {
    let n = n.max(2);
    let nf = n as f64;
    let rows = exec.map(n, |i| {
        let (a, b) = (i as f64 / nf, (i + 1) as f64 / nf);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for branch in map.branches() {
            let (lo, hi) = branch.domain();
            let (s0, s1) = (a.max(lo), b.min(hi));
            if s1 <= s0 {
                continue;
            }
            let (u, v) = (branch.eval(s0), branch.eval(s1));
            let (ylo, yhi) = (u.min(v).clamp(0.0, 1.0), u.max(v).clamp(0.0, 1.0));
            let j0 = ((ylo * nf).floor() as usize).min(n - 1);
            let j1 = ((yhi * nf).ceil() as usize).clamp(j0 + 1, n);
            for j in j0..j1 {
                let (c0, c1) = (ylo.max(j as f64 / nf), yhi.min((j + 1) as f64 / nf));
                if c1 <= c0 {
                    continue;
                }
                let (Some(x0), Some(x1)) = (branch.invert(c0), branch.invert(c1)) else {
                    continue;
                };
                let len = (x1.clamp(s0, s1) - x0.clamp(s0, s1)).abs();
                if len > 0.0 {
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += len * nf,
                        None => row.push((j, len * nf)),
                    }
                }
            }
        }
        let s: f64 = row.iter().map(|e| e.1).sum();
        row.iter_mut().for_each(|e| e.1 /= s);
        row.sort_by_key(|e| e.0);
        row
    });
    UlamOperator::from_rows(rows).expect("Ulam rows are stochastic by construction")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub leading_eigenvalue: f64,
    pub second_modulus: f64,
    pub invariant_density: DensityGrid,
    /// `‖Ph - h‖₁` under the matrix.
    pub residual: f64,
    pub iterations: usize,
    /// Set when the sub-dominant modulus is within `1e-3` of one.
    pub no_spectral_gap: bool,
    pub warnings: Vec<String>,
}

impl SpectralReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Power-iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations spent estimating the sub-dominant modulus.
    pub deflation_iter: usize,
    pub exec: Exec,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20_000,
            deflation_iter: 20,
            exec: Exec::default(),
        }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn invariant_density(op: &UlamOperator, tol: f64, max_iter: usize) -> Result<SpectralReport> {
    invariant_density_with(
        op,
        PowerIteration {
            tol,
            max_iter,
            ..Default::default()
        },
    )
}

/// Fixed density of `vP` by power iteration from the uniform vector, and the
/// sub-dominant modulus from iterating a zero-mass vector.
pub fn invariant_density_with(op: &UlamOperator, cfg: PowerIteration) -> Result<SpectralReport> {
    let n = op.bins();
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let next = op.push(&v, cfg.exec);
        residual = l1(&next, &v);
        iterations += 1;
        v = next;
        if residual <= cfg.tol {
            break;
        }
    }
    if residual > cfg.tol {
        return Err(Error::NoConvergence {
            residual,
            iterations,
        });
    }
    let mass: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= mass);
    let pv = op.push(&v, cfg.exec);
    let leading_eigenvalue = pv.iter().sum::<f64>() / v.iter().sum::<f64>();

    // zero-mass subspace is invariant under vP since P1 = 1
    let mut w: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5)
        .collect();
    let project = |w: &mut Vec<f64>| {
        let s: f64 = w.iter().sum();
        w.iter_mut().zip(&v).for_each(|(x, h)| *x -= s * h);
    };
    project(&mut w);
    let mut norms = vec![w.iter().map(|x| x.abs()).sum::<f64>()];
    for _ in 0..cfg.deflation_iter.max(2) {
        w = op.push(&w, cfg.exec);
        project(&mut w);
        norms.push(w.iter().map(|x| x.abs()).sum());
    }
    let k = norms.len() - 1;
    let k0 = k / 2;
    let second_modulus = if norms[k] <= 1e-300 || norms[k0] <= 1e-300 {
        0.0
    } else {
        (norms[k] / norms[k0]).powf(1.0 / (k - k0) as f64)
    };
    let no_spectral_gap = second_modulus > 1.0 - 1e-3;
    let mut warnings = Vec::new();
    if no_spectral_gap {
        warnings.push(
            "sub-dominant eigenvalue on the unit circle: possible periodic decomposition, \
             probe an iterate T^k"
                .to_string(),
        );
    }
    Ok(SpectralReport {
        leading_eigenvalue,
        second_modulus,
        invariant_density: DensityGrid {
            values: v.iter().map(|m| m * n as f64).collect(),
        },
        residual,
        iterations,
        no_spectral_gap,
        warnings,
    })
}

/// `‖Ph - h‖₁` for the exact operator applied to a grid density.
pub fn fixed_point_defect(map: &PiecewiseExpandingMap, h: &DensityGrid) -> f64 {
    pf_apply_grid(map, h).l1_distance(h).expect("same grid")
}

/// Correlation-against-Lebesgue series with a log-linear rate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    /// `∫ g · Pⁿf dm - ∫ g dμ ∫ f dm` for `n = 0..=N`.
    pub terms: Vec<f64>,
    pub fit: Option<LineFit>,
    /// `exp(slope)` of `log|term|` over the fit window.
    pub rate: Option<f64>,
    pub window: (usize, usize),
}

/// Terms below this are treated as numerically zero.
const SERIES_FLOOR: f64 = 1e-14;

/// Decay of `|∫ f·(g∘Tⁿ) dm - ∫ g dμ ∫ f dm|`, computed as `∫ g · Pⁿf dm`.
/// The fit drops the first two terms and stops at the first term below
/// `100 ε` times the scale of the integrals.
pub fn convergence_rate(
    map: &PiecewiseExpandingMap,
    f0: &DensityGrid,
    g: &Observable1D,
    horizon: usize,
) -> Result<ConvergenceSeries> {
    let n = f0.bins();
    let spec = invariant_density(&ulam_matrix(map, n), 1e-13, 50_000)?;
    let g_mu = spec.invariant_density.integrate(|x| g.eval(x));
    let f_mass = f0.mass();
    let mut f = f0.clone();
    let mut terms = Vec::with_capacity(horizon + 1);
    let mut scale: f64 = 0.0;
    for k in 0..=horizon {
        if k > 0 {
            f = pf_apply_grid(map, &f);
        }
        let gi = f.integrate(|x| g.eval(x));
        scale = scale.max(gi.abs()).max((g_mu * f_mass).abs());
        terms.push(gi - g_mu * f_mass);
    }
    if terms.iter().all(|t| t.abs() < SERIES_FLOOR) {
        return Err(Error::DegenerateSeries {
            floor: SERIES_FLOOR,
        });
    }
    let floor = (100.0 * f64::EPSILON * scale).max(SERIES_FLOOR);
    let start = 2.min(terms.len());
    let end = terms[start..]
        .iter()
        .position(|t| t.abs() < floor)
        .map_or(terms.len(), |p| start + p);
    let xs: Vec<f64> = (start..end).map(|k| k as f64).collect();
    let ys: Vec<f64> = terms[start..end].iter().map(|t| t.abs().ln()).collect();
    let fit = line_fit(&xs, &ys);
    Ok(ConvergenceSeries {
        rate: fit.map(|f| f.slope.exp()),
        fit,
        terms,
        window: (start, end),
    })
}

/// Outcome of a Lasota–Yorke probe `‖Pf‖ ≤ β‖f‖ + C‖f‖₁` in `‖·‖_{1,1/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasotaYorkeProbe {
    pub p: f64,
    pub beta: f64,
    pub c: f64,
    /// `β < 1`.
    pub feasible: bool,
    /// Per trial: `(‖Pf‖_{1,1/p}, ‖f‖_{1,1/p}, ‖f‖₁)`.
    pub trials: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub samples: usize,
    pub radii: usize,
    pub max_pieces: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            samples: 1 << 13,
            radii: 10,
            max_pieces: 24,
            seed: 1,
            exec: Exec::default(),
        }
    }
}

/// A random piecewise Bernstein polynomial of degree ≤ 2 with positive
/// coefficients, normalized to unit mass.
pub fn random_test_density(rng: &mut impl Rng, max_pieces: usize) -> Observable1D {
    let pieces = rng.random_range(1..=max_pieces.max(1));
    let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.random::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let coeffs: Vec<Vec<f64>> = (0..pieces)
        .map(|_| {
            let deg = rng.random_range(0..=2usize);
            (0..=deg).map(|_| rng.random_range(0.05..2.0)).collect()
        })
        .collect();
    let mass: f64 = (0..pieces)
        .map(|k| (cuts[k + 1] - cuts[k]) * coeffs[k].iter().sum::<f64>() / coeffs[k].len() as f64)
        .sum();
    let bps = cuts.clone();
    Observable1D::new(move |x| {
        let k = cuts[1..].partition_point(|&c| c <= x).min(pieces - 1);
        let len = cuts[k + 1] - cuts[k];
        let t = if len > 0.0 { (x - cuts[k]) / len } else { 0.0 };
        let b = &coeffs[k];
        let v = match b.len() {
            1 => b[0],
            2 => b[0] * (1.0 - t) + b[1] * t,
            _ => b[0] * (1.0 - t).powi(2) + 2.0 * b[1] * t * (1.0 - t) + b[2] * t * t,
        };
        v / mass
    })
    .with_breakpoints(bps)
}

/// Smallest `(β, C)` bound in aggregate: minimizes `Σ_i (β N_i + C m_i)`
/// subject to `L_i ≤ β N_i + C m_i`, `β, C ≥ 0`.
pub fn fit_lasota_yorke(trials: &[(f64, f64, f64)]) -> (f64, f64) {
    let (sn, sm) = trials
        .iter()
        .fold((0.0, 0.0), |(a, b), t| (a + t.1, b + t.2));
    let feasible = |beta: f64, c: f64| {
        beta >= 0.0
            && c >= 0.0
            && trials
                .iter()
                .all(|&(l, n, m)| l <= beta * n + c * m + 1e-12 * (1.0 + l))
    };
    let mut cands: Vec<(f64, f64)> = Vec::new();
    for &(l, n, m) in trials {
        if n > 0.0 {
            cands.push((l / n, 0.0));
        }
        if m > 0.0 {
            cands.push((0.0, l / m));
        }
    }
    for (a, &(l1, n1, m1)) in trials.iter().enumerate() {
        for &(l2, n2, m2) in &trials[a + 1..] {
            let det = n1 * m2 - n2 * m1;
            if det.abs() > 1e-300 {
                let beta = (l1 * m2 - l2 * m1) / det;
                let c = (n1 * l2 - n2 * l1) / det;
                cands.push((beta, c));
            }
        }
    }
    cands
        .into_iter()
        .filter(|&(b, c)| feasible(b, c))
        .min_by(|a, b| (a.0 * sn + a.1 * sm).total_cmp(&(b.0 * sn + b.1 * sm)))
        .unwrap_or((f64::INFINITY, f64::INFINITY))
}

/// Measures both sides of the Lasota–Yorke inequality on the constant
/// density plus `trials` random piecewise-polynomial densities.
pub fn lasota_yorke_probe(
    map: &PiecewiseExpandingMap,
    p: f64,
    trials: usize,
    cfg: ProbeConfig,
) -> LasotaYorkeProbe {
    let r = 1.0 / p;
    let eps = dyadic_epsilons(cfg.radii);
    let rows = cfg.exec.map(trials + 1, |k| {
        let f = if k == 0 {
            Observable1D::constant(1.0)
        } else {
            random_test_density(&mut rng::stream(cfg.seed, k as u64), cfg.max_pieces)
        };
        let pf = pf_apply(map, &f);
        let sf = SampledFunction::new(&f, cfg.samples);
        let spf = SampledFunction::new(&pf, cfg.samples);
        let nf = sf.norm_p_r(1.0, r, &eps);
        let npf = spf.norm_p_r(1.0, r, &eps);
        (npf.value(), nf.value(), nf.lp_norm)
    });
    let (beta, c) = fit_lasota_yorke(&rows);
    LasotaYorkeProbe {
        p,
        beta,
        c,
        feasible: beta < 1.0,
        trials: rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    #[test]
    fn doubling_preserves_lebesgue() {
        let t = PiecewiseExpandingMap::doubling();
        let one = pf_apply(&t, &Observable1D::constant(1.0));
        for i in 0..100 {
            assert!((one.eval(i as f64 / 99.0) - 1.0).abs() < 1e-15);
        }
        let g = pf_apply_grid(&t, &DensityGrid::uniform(64));
        assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn doubling_annihilates_cosine() {
        let t = PiecewiseExpandingMap::doubling();
        let pc = pf_apply(&t, &Observable1D::new(|x| (2.0 * PI * x).cos()));
        for i in 0..=200 {
            assert!(pc.eval(i as f64 / 200.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn pf_conserves_mass() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for t in [
            PiecewiseExpandingMap::doubling(),
            PiecewiseExpandingMap::tent(),
            PiecewiseExpandingMap::lorenz(0.75).unwrap(),
        ] {
            for _ in 0..20 {
                let f = random_test_density(&mut rng, 8);
                let pf = pf_apply(&t, &f);
                let m = 1 << 14;
                let mass = |h: &Observable1D| {
                    (0..m)
                        .map(|i| h.eval((i as f64 + 0.5) / m as f64))
                        .sum::<f64>()
                        / m as f64
                };
                assert!((mass(&pf) - mass(&f)).abs() < 5e-3, "{}", t.name());
                let grid = DensityGrid::from_fn(512, |x| f.eval(x));
                let pg = pf_apply_grid(&t, &grid);
                assert!((pg.mass() - grid.mass()).abs() < 2e-2, "{}", t.name());
                assert!(pg.values().iter().all(|&v| v >= -1e-12));
            }
        }
    }

    #[test]
    fn ulam_doubling_two_bins() {
        let u = ulam_matrix(&PiecewiseExpandingMap::doubling(), 2);
        for i in 0..2 {
            for j in 0..2 {
                assert!((u.entry(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ulam_rows_sum_to_one() {
        for t in [
            PiecewiseExpandingMap::tent(),
            PiecewiseExpandingMap::lorenz(0.75).unwrap(),
            PiecewiseExpandingMap::lorenz(0.6).unwrap(),
        ] {
            for n in [2, 7, 64, 333] {
                let u = ulam_matrix(&t, n);
                for row in u.rows() {
                    let s: f64 = row.iter().map(|e| e.1).sum();
                    assert!((s - 1.0).abs() < 1e-12);
                    assert!(row.iter().all(|e| e.1 >= 0.0));
                }
            }
        }
    }

    #[test]
    fn ulam_tent_matches_monte_carlo() {
        let t = PiecewiseExpandingMap::tent();
        let u = ulam_matrix(&t, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut counts = [[0usize; 4]; 4];
        let mut totals = [0usize; 4];
        for _ in 0..1_000_000 {
            let x: f64 = rng.random();
            let Ok(y) = t.eval(x) else { continue };
            let i = ((x * 4.0) as usize).min(3);
            let j = ((y * 4.0) as usize).min(3);
            counts[i][j] += 1;
            totals[i] += 1;
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..4 {
            for j in 0..4 {
                let mc = counts[i][j] as f64 / totals[i] as f64;
                assert!((u.entry(i, j) - mc).abs() < 3e-3, "({i},{j})");
            }
        }
    }

    #[test]
    fn doubling_density_is_uniform() {
        let u = ulam_matrix(&PiecewiseExpandingMap::doubling(), 1024);
        let r = invariant_density(&u, 1e-12, 100).unwrap();
        let err = r
            .invariant_density
            .l1_distance(&DensityGrid::uniform(1024))
            .unwrap();
        assert!(err <= 1e-10);
        assert!((r.leading_eigenvalue - 1.0).abs() < 1e-8);
        assert!(r.second_modulus < 1.0);
        assert!(
            fixed_point_defect(&PiecewiseExpandingMap::doubling(), &r.invariant_density) < 1e-12
        );
    }

    #[test]
    fn identity_operator_has_no_gap() {
        let rows = (0..8).map(|i| vec![(i, 1.0)]).collect();
        let u = UlamOperator::from_rows(rows).unwrap();
        match invariant_density(&u, 1e-12, 100) {
            Ok(r) => assert!(r.no_spectral_gap && !r.warnings.is_empty()),
            Err(e) => assert!(matches!(e, Error::NoConvergence { .. })),
        }
    }

    #[test]
    fn swap_operator_does_not_converge_from_skewed_start() {
        // periodic two-cycle: uniform is fixed, gap flagged
        let u = UlamOperator::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap();
        let r = invariant_density(&u, 1e-12, 10).unwrap();
        assert!(r.no_spectral_gap);
    }

    #[test]
    fn triplet_export() {
        let u = ulam_matrix(&PiecewiseExpandingMap::doubling(), 2);
        let t = u.to_triplets();
        assert_eq!(t.lines().count(), 4);
        assert!(t.starts_with("0 0 5.0000000000000000e-1\n"));
    }

    #[test]
    fn cosine_series_vanishes_after_one_step() {
        let t = PiecewiseExpandingMap::doubling();
        let f0 = DensityGrid::from_fn(1024, |x| 1.0 + (2.0 * PI * x).cos());
        let g = Observable1D::new(|x| (2.0 * PI * x).cos());
        let s = convergence_rate(&t, &f0, &g, 5).unwrap();
        assert!((s.terms[0] - 0.5).abs() < 1e-5);
        assert!(s.terms[1..].iter().all(|v| v.abs() < 1e-5), "{:?}", s.terms);
    }

    #[test]
    fn linear_mode_decays_at_one_half() {
        let t = PiecewiseExpandingMap::doubling();
        let f0 = DensityGrid::from_fn(1024, |x| 1.0 + (x - 0.5));
        let s = convergence_rate(&t, &f0, &Observable1D::identity(), 40).unwrap();
        // P(x - 1/2) = (x - 1/2)/2, so term n = 2^-n / 12
        for (n, v) in s.terms.iter().enumerate().take(20) {
            let exact = 0.5f64.powi(n as i32) / 12.0;
            assert!((v - exact).abs() < 1e-6 * exact.max(1e-10), "n={n}");
        }
        let rate = s.rate.unwrap();
        assert!(rate > 0.45 && rate < 0.55, "{rate}");
    }

    #[test]
    fn constant_observable_is_degenerate() {
        let t = PiecewiseExpandingMap::doubling();
        let f0 = DensityGrid::from_fn(256, |x| 0.5 + x);
        assert!(matches!(
            convergence_rate(&t, &f0, &Observable1D::constant(3.0), 10),
            Err(Error::DegenerateSeries { .. })
        ));
    }

    #[test]
    fn ly_fit_on_exact_line() {
        // L = 0.5 N + 0.5 with m = 1
        let trials: Vec<_> = (1..10)
            .map(|k| (0.5 * k as f64 + 0.5, k as f64, 1.0))
            .collect();
        let (b, c) = fit_lasota_yorke(&trials);
        assert!((b - 0.5).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ly_constant_forces_c_at_least_one() {
        let t = PiecewiseExpandingMap::doubling();
        let probe = lasota_yorke_probe(&t, 1.0, 8, ProbeConfig::default());
        let (l, n, m) = probe.trials[0];
        assert_eq!(n, 1.0);
        assert!((l - 1.0).abs() < 1e-12 && (m - 1.0).abs() < 1e-12);
        assert!(probe.c >= 1.0 - probe.beta - 1e-12);
        assert!(probe.beta * n + probe.c * m >= l - 1e-12);
    }
}
