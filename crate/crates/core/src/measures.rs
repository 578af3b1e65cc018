//! Probability measures on `I = [0,1]` and `Q = [0,1]²`: Wasserstein-1 and
//! variation distances, pushforwards, disintegration along vertical leaves,
//! the marginal projection `π(f)(x) = ∫ f(x,t) dt`, and the product
//! inequality check for observables with a vertical Lipschitz norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::csv_table;
use crate::maps::{PiecewiseExpandingMap, Point, SkewProductMap};
use crate::observable::{Observable1D, Observable2D};
use crate::par::Exec;
use crate::transfer::{pf_apply_grid_with, DensityGrid};

/// Nudge applied to samples that land on a cut during a pushforward.
pub const CUT_NUDGE: f64 = 1e-9;

const MASS_TOLERANCE: f64 = 1e-10;

/// A finite measure on `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure1D {
    /// Equal-weight atoms at sorted sample points, total mass one.
    Empirical(Vec<f64>),
    /// Atoms with explicit nonnegative weights, sorted by position.
    Weighted(Vec<(f64, f64)>),
    /// A piecewise-constant density.
    Grid(DensityGrid),
}

impl Measure1D {
    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParams(
                "empirical measure needs samples".into(),
            ));
        }
        if samples.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidParams("samples must lie in [0, 1]".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self::Empirical(samples))
    }

    pub fn weighted(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms
            .iter()
            .any(|&(x, w)| !(0.0..=1.0).contains(&x) || !(w >= 0.0 && w.is_finite()))
        {
            return Err(Error::InvalidParams(
                "atoms must lie in [0, 1] with finite weights >= 0".into(),
            ));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::Weighted(atoms))
    }

    pub fn dirac(a: f64) -> Result<Self> {
        Self::empirical(vec![a])
    }

    pub fn lebesgue(bins: usize) -> Self {
        Self::Grid(DensityGrid::uniform(bins))
    }

    pub fn density(grid: DensityGrid) -> Self {
        Self::Grid(grid)
    }

    pub fn mass(&self) -> f64 {
        match self {
            Self::Empirical(_) => 1.0,
            Self::Weighted(a) => a.iter().map(|e| e.1).sum(),
            Self::Grid(g) => g.mass(),
        }
    }

    /// `Σ aᵢ μᵢ`; grids must share a bin count, atoms are merged.
    pub fn mixture(parts: &[(f64, &Measure1D)]) -> Result<Self> {
        if parts.iter().all(|(_, m)| matches!(m, Self::Grid(_))) && !parts.is_empty() {
            let bins = match parts[0].1 {
                Self::Grid(g) => g.bins(),
                _ => unreachable!(),
            };
            let mut values = vec![0.0; bins];
            for (a, m) in parts {
                let Self::Grid(g) = m else { unreachable!() };
                if g.bins() != bins {
                    return Err(Error::GridMismatch(format!("{} vs {bins} bins", g.bins())));
                }
                values
                    .iter_mut()
                    .zip(g.values())
                    .for_each(|(v, x)| *v += a * x);
            }
            return Ok(Self::Grid(DensityGrid::new(values)?));
        }
        let mut atoms = Vec::new();
        for (a, m) in parts {
            match m {
                Self::Empirical(s) => {
                    let w = a / s.len() as f64;
                    atoms.extend(s.iter().map(|&x| (x, w)));
                }
                Self::Weighted(at) => atoms.extend(at.iter().map(|&(x, w)| (x, a * w))),
                Self::Grid(_) => {
                    return Err(Error::InvalidParams(
                        "cannot mix densities with atomic measures".into(),
                    ))
                }
            }
        }
        Self::weighted(atoms)
    }

    /// `∫ g dμ`; densities use 5-point Gauss–Legendre per bin.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        match self {
            Self::Empirical(s) => s.iter().map(|&x| g(x)).sum::<f64>() / s.len() as f64,
            Self::Weighted(a) => a.iter().map(|&(x, w)| w * g(x)).sum(),
            Self::Grid(d) => {
                const NODES: [(f64, f64); 5] = [
                    (0.0, 0.568_888_888_888_888_9),
                    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
                    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
                    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
                    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
                ];
                let n = d.bins() as f64;
                d.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let c = (i as f64 + 0.5) / n;
                        v * NODES
                            .iter()
                            .map(|&(t, w)| w * g(c + 0.5 * t / n))
                            .sum::<f64>()
                            * 0.5
                            / n
                    })
                    .sum()
            }
        }
    }

    /// Histogram density on `bins` equal bins.
    pub fn binned(&self, bins: usize) -> Result<DensityGrid> {
        let bins = bins.max(1);
        let mut values = vec![0.0; bins];
        let mut add = |x: f64, w: f64| {
            let i = ((x * bins as f64) as usize).min(bins - 1);
            values[i] += w * bins as f64;
        };
        match self {
            Self::Empirical(s) => s.iter().for_each(|&x| add(x, 1.0 / s.len() as f64)),
            Self::Weighted(a) => a.iter().for_each(|&(x, w)| add(x, w)),
            Self::Grid(g) => {
                let n = g.bins();
                if n % bins == 0 {
                    return g.coarsen(bins);
                }
                return Err(Error::GridMismatch(format!(
                    "cannot rebin {n} bins onto {bins}"
                )));
            }
        }
        DensityGrid::new(values)
    }

    /// `μ([0, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Self::Empirical(s) => s.partition_point(|&x| x <= t) as f64 / s.len() as f64,
            Self::Weighted(a) => a[..a.partition_point(|e| e.0 <= t)]
                .iter()
                .map(|e| e.1)
                .sum(),
            Self::Grid(g) => {
                let n = g.bins();
                let u = (t.clamp(0.0, 1.0) * n as f64).min(n as f64);
                let k = (u.floor() as usize).min(n);
                let full: f64 = g.values()[..k].iter().sum();
                let part = if k < n {
                    (u - k as f64) * g.values()[k]
                } else {
                    0.0
                };
                (full + part) / n as f64
            }
        }
    }

    /// Points where the CDF is not affine.
    fn knots(&self) -> Vec<f64> {
        match self {
            Self::Empirical(s) => s.clone(),
            Self::Weighted(a) => a.iter().map(|e| e.0).collect(),
            Self::Grid(g) => (0..=g.bins()).map(|i| i as f64 / g.bins() as f64).collect(),
        }
    }

    fn cdf_slope(&self, t: f64) -> f64 {
        match self {
            Self::Grid(g) => {
                let n = g.bins();
                g.values()[((t * n as f64) as usize).min(n - 1)]
            }
            _ => 0.0,
        }
    }

    /// CSV: sample list for atomic measures, density table for grids.
    pub fn to_csv(&self) -> String {
        match self {
            Self::Empirical(s) => csv_table(&["x"], s.iter().map(|&x| vec![x])),
            Self::Weighted(a) => csv_table(&["x", "weight"], a.iter().map(|&(x, w)| vec![x, w])),
            Self::Grid(g) => g.to_csv(),
        }
    }
}

fn check_masses(a: &Measure1D, b: &Measure1D) -> Result<()> {
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > MASS_TOLERANCE {
        return Err(Error::MassMismatch(ma, mb));
    }
    Ok(())
}

/// `∫₀¹ |F₁ - F₂| dt`, exact on every representation. Equal-size empirical
/// measures use the sorted-sample formula.
pub fn w1_distance(mu1: &Measure1D, mu2: &Measure1D) -> Result<f64> {
    check_masses(mu1, mu2)?;
    if let (Measure1D::Empirical(a), Measure1D::Empirical(b)) = (mu1, mu2) {
        if a.len() == b.len() {
            return Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64);
        }
    }
    let mut knots = mu1.knots();
    knots.extend(mu2.knots());
    knots.push(0.0);
    knots.push(1.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let d = mu1.cdf(mid) - mu2.cdf(mid);
        let s = mu1.cdf_slope(mid) - mu2.cdf_slope(mid);
        total += abs_affine_integral(d - s * (mid - a), d + s * (b - mid), b - a);
    }
    Ok(total)
}

/// `∫ |ℓ|` over an interval of length `len` for affine `ℓ` with end values
/// `u`, `v`.
fn abs_affine_integral(u: f64, v: f64, len: f64) -> f64 {
    if u * v >= 0.0 {
        0.5 * (u.abs() + v.abs()) * len
    } else {
        0.5 * (u * u + v * v) / (u.abs() + v.abs()) * len
    }
}

/// `∫ |h₁ - h₂| dm` between densities on a common grid.
pub fn variation_distance(mu1: &Measure1D, mu2: &Measure1D) -> Result<f64> {
    match (mu1, mu2) {
        (Measure1D::Grid(a), Measure1D::Grid(b)) => a.l1_distance(b),
        (Measure1D::Grid(a), other) | (other, Measure1D::Grid(a)) => {
            a.l1_distance(&other.binned(a.bins())?)
        }
        _ => Err(Error::GridMismatch(
            "bin atomic measures before taking the variation distance".into(),
        )),
    }
}

/// A pushed-forward measure and the number of cut nudges it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Pushed<M> {
    pub measure: M,
    pub nudged: usize,
}

fn step_nudged(map: &PiecewiseExpandingMap, x: f64, nudged: &mut usize) -> f64 {
    match map.eval(x) {
        Ok(y) => y,
        Err(_) => {
            *nudged += 1;
            map.eval(map.nudge(x, CUT_NUDGE))
                .or_else(|_| map.eval(x - CUT_NUDGE))
                .expect("nudged point is off the cut")
        }
    }
}

/// `(Tⁿ)_* μ`: atoms are mapped, densities go through the transfer operator.
pub fn pushforward(map: &PiecewiseExpandingMap, mu: &Measure1D, n: usize) -> Pushed<Measure1D> {
    pushforward_with(map, mu, n, Exec::default())
}

pub fn pushforward_with(
    map: &PiecewiseExpandingMap,
    mu: &Measure1D,
    n: usize,
    exec: Exec,
) -> Pushed<Measure1D> {
    let iterate = |x: f64| {
        let mut nudged = 0;
        let y = (0..n).fold(x, |y, _| step_nudged(map, y, &mut nudged));
        (y, nudged)
    };
    match mu {
        Measure1D::Empirical(s) => {
            let out = exec.map_slice(s, |&x| iterate(x));
            let nudged = out.iter().map(|e| e.1).sum();
            let mut samples: Vec<f64> = out.into_iter().map(|e| e.0).collect();
            samples.sort_by(f64::total_cmp);
            Pushed {
                measure: Measure1D::Empirical(samples),
                nudged,
            }
        }
        Measure1D::Weighted(a) => {
            let out = exec.map_slice(a, |&(x, w)| (iterate(x), w));
            let nudged = out.iter().map(|e| e.0 .1).sum();
            let mut atoms: Vec<(f64, f64)> = out.into_iter().map(|((y, _), w)| (y, w)).collect();
            atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
            Pushed {
                measure: Measure1D::Weighted(atoms),
                nudged,
            }
        }
        Measure1D::Grid(g) => {
            let mut g = g.clone();
            for _ in 0..n {
                g = pf_apply_grid_with(map, &g, exec);
            }
            Pushed {
                measure: Measure1D::Grid(g),
                nudged: 0,
            }
        }
    }
}

/// Pushforward of atoms on a single leaf by a fiber map `y ↦ G(y)`.
pub fn pushforward_fiber(g: impl Fn(f64) -> f64, mu: &Measure1D, n: usize) -> Result<Measure1D> {
    let it = |y: f64| (0..n).fold(y, |y, _| g(y).clamp(0.0, 1.0));
    match mu {
        Measure1D::Empirical(s) => Measure1D::empirical(s.iter().map(|&y| it(y)).collect()),
        Measure1D::Weighted(a) => Measure1D::weighted(a.iter().map(|&(y, w)| (it(y), w)).collect()),
        Measure1D::Grid(_) => Err(Error::InvalidParams(
            "fiber pushforward is defined on atomic measures".into(),
        )),
    }
}

/// A probability measure on the square.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure2D {
    /// Equal-weight point cloud.
    Empirical(Vec<Point>),
    /// Marginal bin masses with one conditional per bin; `x` is uniform
    /// within each bin.
    Product {
        masses: Vec<f64>,
        conditionals: Vec<Measure1D>,
    },
}

impl Measure2D {
    pub fn cloud(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParams("point cloud is empty".into()));
        }
        if points
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]))
        {
            return Err(Error::InvalidParams(
                "points must lie in the unit square".into(),
            ));
        }
        Ok(Self::Empirical(points))
    }

    pub fn product(masses: Vec<f64>, conditionals: Vec<Measure1D>) -> Result<Self> {
        if masses.len() != conditionals.len() || masses.is_empty() {
            return Err(Error::GridMismatch(format!(
                "{} masses vs {} conditionals",
                masses.len(),
                conditionals.len()
            )));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE || masses.iter().any(|&m| m < 0.0) {
            return Err(Error::MassMismatch(total, 1.0));
        }
        Ok(Self::Product {
            masses,
            conditionals,
        })
    }

    /// `∫ g dμ`; product measures integrate `x` by 5-point Gauss–Legendre
    /// per bin.
    pub fn integrate(&self, g: &Observable2D) -> f64 {
        match self {
            Self::Empirical(p) => p.iter().map(|&q| g.at(q)).sum::<f64>() / p.len() as f64,
            Self::Product {
                masses,
                conditionals,
            } => {
                let n = masses.len() as f64;
                masses
                    .iter()
                    .zip(conditionals)
                    .enumerate()
                    .map(|(i, (&m, c))| {
                        let leaf = Measure1D::Grid(DensityGrid::uniform(1));
                        let lo = i as f64 / n;
                        m * n * leaf.integrate(|t| c.integrate(|y| g.eval(lo + t / n, y))) / n
                    })
                    .sum()
            }
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        match self {
            Self::Empirical(p) => Ok(csv_table(&["x", "y"], p.iter().map(|q| q.to_vec()))),
            Self::Product { .. } => Err(Error::InvalidParams(
                "product measures export through their disintegration".into(),
            )),
        }
    }
}

/// `(F^n)_* μ` for a point cloud.
pub fn pushforward_cloud(
    map: &SkewProductMap,
    points: &[Point],
    n: usize,
    exec: Exec,
) -> Pushed<Measure2D> {
    let out = exec.map_slice(points, |&p| {
        let mut nudged = 0;
        let mut q = p;
        for _ in 0..n {
            q = match map.eval(q) {
                Ok(v) => v,
                Err(_) => {
                    nudged += 1;
                    let x = map.base().nudge(q[0], CUT_NUDGE);
                    map.eval([x, q[1]])
                        .or_else(|_| map.eval([q[0] - CUT_NUDGE, q[1]]))
                        .expect("nudged point is off the cut")
                }
            };
        }
        (q, nudged)
    });
    Pushed {
        nudged: out.iter().map(|e| e.1).sum(),
        measure: Measure2D::Empirical(out.into_iter().map(|e| e.0).collect()),
    }
}

/// `μ` split into an `x`-histogram and per-bin conditional laws of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Disintegration {
    pub bins: usize,
    /// Mass of each `x`-bin.
    pub marginal: Vec<f64>,
    /// Conditional of `y` per bin; Lebesgue on empty bins.
    pub conditionals: Vec<Measure1D>,
    /// The original points grouped by bin, kept for exact reassembly.
    cells: Vec<Vec<Point>>,
    total: usize,
}

impl Disintegration {
    pub fn is_empty_bin(&self, i: usize) -> bool {
        self.cells[i].is_empty()
    }

    /// `Σ_b μ(bin_b) ∫ g dμ_b`, regrouped from the original points.
    pub fn integrate(&self, g: &Observable2D) -> f64 {
        self.cells
            .iter()
            .map(|c| c.iter().map(|&p| g.at(p)).sum::<f64>())
            .sum::<f64>()
            / self.total as f64
    }

    /// CSV rows `bin_left,mass,conditional_mean`.
    pub fn to_csv(&self) -> String {
        let n = self.bins as f64;
        csv_table(
            &["bin_left", "mass", "conditional_mean"],
            (0..self.bins).map(|i| {
                vec![
                    i as f64 / n,
                    self.marginal[i],
                    self.conditionals[i].integrate(|y| y),
                ]
            }),
        )
    }
}

fn bin_of(x: f64, bins: usize) -> usize {
    ((x * bins as f64) as usize).min(bins - 1)
}

pub fn disintegrate(points: &[Point], bins: usize) -> Result<Disintegration> {
    disintegrate_with(points, bins, Exec::default())
}

pub fn disintegrate_with(points: &[Point], bins: usize, exec: Exec) -> Result<Disintegration> {
    if points.is_empty() || bins == 0 {
        return Err(Error::InvalidParams(
            "disintegration needs points and at least one bin".into(),
        ));
    }
    let mut cells: Vec<Vec<Point>> = vec![Vec::new(); bins];
    for &p in points {
        cells[bin_of(p[0], bins)].push(p);
    }
    let total = points.len();
    let marginal = cells
        .iter()
        .map(|c| c.len() as f64 / total as f64)
        .collect();
    let conditionals = exec.map_slice(&cells, |c| {
        if c.is_empty() {
            Measure1D::lebesgue(1)
        } else {
            Measure1D::empirical(c.iter().map(|p| p[1]).collect()).expect("points in Q")
        }
    });
    Ok(Disintegration {
        bins,
        marginal,
        conditionals,
        cells,
        total,
    })
}

/// `π(f)(x) = ∫₀¹ f(x,t) dt` by the composite trapezoid rule on `grid`
/// cells.
pub fn project_pi(f: &Observable2D, grid: usize) -> Observable1D {
    let f = f.clone();
    let m = grid.max(2);
    Observable1D::new(move |x| {
        let inner: f64 = (1..m).map(|k| f.eval(x, k as f64 / m as f64)).sum();
        (inner + 0.5 * (f.eval(x, 0.0) + f.eval(x, 1.0))) / m as f64
    })
}

/// Both sides of `|∫g dμ¹ - ∫g dμ²| ≤ ‖g‖_{↕lip}(ε + δ)` on a bin grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProdReport {
    pub lhs: f64,
    /// `Σ_b μ¹(bin_b) W₁(μ¹_b, μ²_b)`.
    pub epsilon: f64,
    /// `Σ_b |μ¹(bin_b) - μ²(bin_b)|`.
    pub delta: f64,
    pub vertical_lip: f64,
    /// Horizontal discretization slack `Lip_x(g) / bins`.
    pub slack: f64,
    pub holds: bool,
    /// The conditionals are binned surrogates for the exact leaf measures.
    pub binned_surrogate: bool,
}

/// Evaluates the product inequality for two point clouds. `lip_x` bounds the
/// horizontal Lipschitz constant of `g`; it only enters the slack.
pub fn prod_inequality_check(
    mu1: &[Point],
    mu2: &[Point],
    g: &Observable2D,
    lip_x: f64,
    bins: usize,
) -> Result<ProdReport> {
    let v = g.vertical_lip().ok_or_else(|| {
        Error::InvalidParams("observable needs a declared vertical Lipschitz norm".into())
    })?;
    let d1 = disintegrate(mu1, bins)?;
    let d2 = disintegrate(mu2, bins)?;
    let lhs = (d1.integrate(g) - d2.integrate(g)).abs();
    let mut epsilon = 0.0;
    for b in 0..bins {
        if d1.marginal[b] > 0.0 {
            epsilon += d1.marginal[b] * w1_distance(&d1.conditionals[b], &d2.conditionals[b])?;
        }
    }
    let delta = d1
        .marginal
        .iter()
        .zip(&d2.marginal)
        .map(|(a, b)| (a - b).abs())
        .sum();
    let vertical_lip = v.sup + v.lip_y;
    let slack = lip_x / bins as f64;
    let bound = vertical_lip * (epsilon + delta) + slack;
    Ok(ProdReport {
        lhs,
        epsilon,
        delta,
        vertical_lip,
        slack,
        holds: lhs <= bound * (1.0 + 1e-12) + 1e-15,
        binned_surrogate: true,
    })
}
