//! Generalized variation functionals: universal p-variation, `var^□`,
//! local oscillation `osc_p`, `var_{p,r}` and `‖·‖_{p,r}`, and the
//! anisotropic norm `‖f‖_{↕lip} = ‖f‖_∞ + Lip_y(f)`.
//!
//! Suprema over infinitely many subdivisions or radii are replaced by maxima
//! over nested grids, so every estimate is a lower bound that can only grow
//! under refinement. Tagged observables get exact universal variation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::{Observable1D, Observable2D};
use crate::par::Exec;

/// The fixed radius bound `A` in the definitions of `osc_p` and `var_{p,r}`.
pub const OSC_RADIUS_BOUND: f64 = 0.5;

/// Default resolution of the grid used to sample oscillations.
pub const DEFAULT_OSC_SAMPLES: usize = 1 << 14;

/// Offset used to read one-sided limits at breakpoints of tagged observables.
const ONE_SIDED: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub norm: String,
    pub value: f64,
    pub grid: usize,
    pub is_lower_bound: bool,
    /// Subdivision points attaining `value`.
    pub witness: Vec<f64>,
}

impl VariationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `(Σ |h(x_i) - h(x_{i+1})|^p)^{1/p}` for a given subdivision.
pub fn p_variation_on(h: &Observable1D, p: f64, points: &[f64]) -> f64 {
    let vals: Vec<f64> = points.iter().map(|&x| h.eval(x)).collect();
    lp_increments(&vals, p)
}

fn lp_increments(vals: &[f64], p: f64) -> f64 {
    let s: f64 = vals.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).sum();
    s.powf(1.0 / p)
}

/// Best subsequence of `vals` for `Σ|Δ|^p`; returns (sum of |Δ|^p, indices).
fn best_subsequence(vals: &[f64], p: f64) -> (f64, Vec<usize>) {
    let n = vals.len();
    if n < 2 {
        return (0.0, (0..n).collect());
    }
    if p == 1.0 {
        let s = vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        return (s, (0..n).collect());
    }
    let mut best = vec![0.0f64; n];
    let mut prev = vec![usize::MAX; n];
    for j in 1..n {
        for i in 0..j {
            let cand = best[i] + (vals[j] - vals[i]).abs().powf(p);
            if cand > best[j] {
                best[j] = cand;
                prev[j] = i;
            }
        }
    }
    let (mut end, &total) = best
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut idx = vec![end];
    while prev[end] != usize::MAX {
        end = prev[end];
        idx.push(end);
    }
    idx.reverse();
    (total, idx)
}

/// Keeps the endpoints and every local extremum of a sequence; an optimal
/// p-variation subdivision (p ≥ 1) only ever needs these.
fn turning_points(xs: &[f64], vals: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = vals.len();
    let mut kx = Vec::new();
    let mut kv = Vec::new();
    for i in 0..n {
        let keep = if i == 0 || i + 1 == n {
            true
        } else {
            let a = vals[i] - vals[i - 1];
            let b = vals[i + 1] - vals[i];
            a * b < 0.0 || (a != 0.0 && b == 0.0) || (a == 0.0 && b != 0.0)
        };
        if keep {
            kx.push(xs[i]);
            kv.push(vals[i]);
        }
    }
    (kx, kv)
}

/// Universal p-variation `var_p(h)`: exact for tagged observables, otherwise
/// the supremum over the uniform grid with `grid_size` cells.
pub fn universal_p_variation(h: &Observable1D, p: f64, grid_size: usize) -> VariationReport {
    assert!(p >= 1.0, "p-variation needs p >= 1");
    let grid_size = grid_size.max(1);
    let (xs, is_lower_bound) = match h.breakpoints() {
        Some(bps) => {
            let mut xs = Vec::with_capacity(3 * bps.len());
            for &b in bps {
                if b > 0.0 {
                    xs.push(b - ONE_SIDED);
                }
                xs.push(b);
                if b < 1.0 {
                    xs.push(b + ONE_SIDED);
                }
            }
            (xs, false)
        }
        None => (
            (0..=grid_size)
                .map(|i| i as f64 / grid_size as f64)
                .collect(),
            true,
        ),
    };
    let (xs, vals): (Vec<f64>, Vec<f64>) = xs
        .into_iter()
        .map(|x| (x, h.eval(x)))
        .filter(|(_, v)| v.is_finite())
        .unzip();
    let (kx, kv) = turning_points(&xs, &vals);
    let (total, idx) = best_subsequence(&kv, p);
    VariationReport {
        norm: format!("var_{p}"),
        value: total.powf(1.0 / p),
        grid: grid_size,
        is_lower_bound,
        witness: idx.into_iter().map(|i| kx[i]).collect(),
    }
}

/// `var^□(f)`: the sum over consecutive grid columns of
/// `max_y |f(x_i, y) - f(x_{i+1}, y)|`, on a `grid_size × grid_size` grid.
pub fn var_square(f: &Observable2D, grid_size: usize) -> VariationReport {
    var_square_with(f, grid_size, Exec::default())
}

pub fn var_square_with(f: &Observable2D, grid_size: usize, exec: Exec) -> VariationReport {
    let n = grid_size.max(1);
    let coord = |i: usize| i as f64 / n as f64;
    let columns: Vec<Vec<f64>> = exec.map(n + 1, |i| {
        let x = coord(i);
        (0..=n).map(|j| f.eval(x, coord(j))).collect()
    });
    let jumps: Vec<f64> = exec.map(n, |i| {
        columns[i]
            .iter()
            .zip(&columns[i + 1])
            .map(|(a, b)| (a - b).abs())
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    });
    VariationReport {
        norm: "var_square".into(),
        value: jumps.iter().sum(),
        grid: n,
        is_lower_bound: true,
        witness: (0..=n).map(coord).collect(),
    }
}

/// `‖f‖_{↕lip} = sup|f| + Lip_y(f)`; exact when the observable declares
/// both constants, a grid lower bound otherwise.
pub fn vertical_lip_norm(f: &Observable2D, grid_size: usize) -> f64 {
    if let Some(v) = f.vertical_lip() {
        return v.sup + v.lip_y;
    }
    let (sup, lip) = sup_and_vertical_lip(f, grid_size, Exec::default());
    sup + lip
}

/// Grid estimates of `sup|f|` and `Lip_y(f)`.
pub fn sup_and_vertical_lip(f: &Observable2D, grid_size: usize, exec: Exec) -> (f64, f64) {
    let n = grid_size.max(1);
    let h = 1.0 / n as f64;
    let rows = exec.map(n + 1, |i| {
        let x = i as f64 * h;
        let col: Vec<f64> = (0..=n).map(|j| f.eval(x, j as f64 * h)).collect();
        let sup = col
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let lip = col
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / h)
            .filter(|d| d.is_finite())
            .fold(0.0f64, f64::max);
        (sup, lip)
    });
    rows.iter()
        .fold((0.0f64, 0.0f64), |(s, l), &(a, b)| (s.max(a), l.max(b)))
}

/// Exponent for `osc_p` and `L^p` norms; `Inf` is the sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Inf,
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            Exponent::Inf
        } else {
            Exponent::Finite(p)
        }
    }
}

/// A function sampled on `k/m`, `k = 0..=m`. Oscillations are taken over
/// the grid points of closed windows, integrals by the trapezoid rule.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(h: &Observable1D, samples: usize) -> Self {
        Self::with_exec(h, samples, Exec::Sequential)
    }

    pub fn with_exec(h: &Observable1D, samples: usize, exec: Exec) -> Self {
        let m = samples.max(2);
        Self {
            values: exec.map(m + 1, |k| h.eval(k as f64 / m as f64)),
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(values.len() >= 2);
        Self { values }
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn weight(&self, k: usize) -> f64 {
        let m = self.cells();
        let w = 1.0 / m as f64;
        if k == 0 || k == m {
            0.5 * w
        } else {
            w
        }
    }

    /// `‖h‖_p` with respect to Lebesgue measure.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        let finite = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite());
        match p {
            Exponent::Inf => finite.fold(0.0, |m, (_, v)| m.max(v.abs())),
            Exponent::Finite(p) => {
                let (s, w) = finite.fold((0.0, 0.0), |(s, w), (k, v)| {
                    let wk = self.weight(k);
                    (s + wk * v.abs().powf(p), w + wk)
                });
                if w == 0.0 {
                    0.0
                } else {
                    (s / w).powf(1.0 / p)
                }
            }
        }
    }

    /// `osc(h, ε, x_k)` for every grid point.
    pub fn local_oscillation(&self, eps: f64) -> Vec<f64> {
        let m = self.cells();
        let half = (eps * m as f64 * (1.0 + 1e-12)).floor() as usize;
        let vals = &self.values;
        let n = vals.len();
        let mut out = vec![0.0; n];
        let mut maxq: VecDeque<usize> = VecDeque::new();
        let mut minq: VecDeque<usize> = VecDeque::new();
        let mut right = 0usize;
        for (k, o) in out.iter_mut().enumerate() {
            let hi = (k + half).min(n - 1);
            while right <= hi {
                if vals[right].is_finite() {
                    while maxq.back().is_some_and(|&j| vals[j] <= vals[right]) {
                        maxq.pop_back();
                    }
                    maxq.push_back(right);
                    while minq.back().is_some_and(|&j| vals[j] >= vals[right]) {
                        minq.pop_back();
                    }
                    minq.push_back(right);
                }
                right += 1;
            }
            let lo = k.saturating_sub(half);
            while maxq.front().is_some_and(|&j| j < lo) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&j| j < lo) {
                minq.pop_front();
            }
            *o = match (maxq.front(), minq.front()) {
                (Some(&a), Some(&b)) => vals[a] - vals[b],
                _ => 0.0,
            };
        }
        out
    }

    /// `osc_p(h, ε) = ‖osc(h, ε, ·)‖_p`.
    pub fn osc_p(&self, eps: f64, p: Exponent) -> f64 {
        SampledFunction {
            values: self.local_oscillation(eps),
        }
        .lp_norm(p)
    }

    /// `max_ε ε^{-r} osc_p(h, ε)` over the supplied radii.
    pub fn var_p_r(&self, p: Exponent, r: f64, epsilons: &[f64]) -> f64 {
        epsilons
            .iter()
            .map(|&e| e.powf(-r) * self.osc_p(e, p))
            .fold(0.0, f64::max)
    }

    pub fn norm_p_r(&self, p: f64, r: f64, epsilons: &[f64]) -> NormPR {
        NormPR {
            variation: self.var_p_r(Exponent::Finite(p), r, epsilons),
            lp_norm: self.lp_norm(Exponent::Finite(p)),
        }
    }
}

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    for &eps in epsilons {
        if !(eps > 0.0 && eps <= OSC_RADIUS_BOUND) {
            return Err(Error::InvalidEpsilon {
                eps,
                max: OSC_RADIUS_BOUND,
            });
        }
    }
    Ok(())
}

/// Dyadic radii `A, A/2, ..., A/2^{count-1}`.
pub fn dyadic_epsilons(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| OSC_RADIUS_BOUND / (1u64 << k) as f64)
        .collect()
}

/// `osc_p(h, ε)` for each `ε`, from `samples` grid cells.
pub fn osc_p_profile(
    h: &Observable1D,
    epsilons: &[f64],
    p: impl Into<Exponent>,
    samples: usize,
) -> Result<Vec<f64>> {
    check_epsilons(epsilons)?;
    let p = p.into();
    let s = SampledFunction::with_exec(h, samples, Exec::default());
    Ok(Exec::default().map_slice(epsilons, |&e| s.osc_p(e, p)))
}

/// `‖h‖_{p,r} = var_{p,r}(h) + ‖h‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPR {
    pub variation: f64,
    pub lp_norm: f64,
}

impl NormPR {
    pub fn value(&self) -> f64 {
        self.variation + self.lp_norm
    }
}

pub fn norm_p_r(h: &Observable1D, p: f64, r: f64, epsilons: &[f64]) -> Result<NormPR> {
    norm_p_r_with(h, p, r, epsilons, DEFAULT_OSC_SAMPLES)
}

pub fn norm_p_r_with(
    h: &Observable1D,
    p: f64,
    r: f64,
    epsilons: &[f64],
    samples: usize,
) -> Result<NormPR> {
    check_epsilons(epsilons)?;
    if !(0.0..=1.0).contains(&r) || p < 1.0 {
        return Err(Error::InvalidParams(format!(
            "norm_p_r needs p >= 1 and r in [0, 1], got p = {p}, r = {r}"
        )));
    }
    Ok(SampledFunction::with_exec(h, samples, Exec::default()).norm_p_r(p, r, epsilons))
}

/// The chain `var_{1,1/p} ≤ var_{p,1/p} ≤ 2^{1/p} var_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationChain {
    pub p: f64,
    pub var_1_r: f64,
    pub var_p_r: f64,
    pub var_p: f64,
    pub holds: bool,
    /// True when `var_p` is exact, so a failure would be a real violation.
    pub certified: bool,
}

pub fn compare_variations(h: &Observable1D, p: f64) -> VariationChain {
    let r = 1.0 / p;
    let eps = dyadic_epsilons(12);
    let s = SampledFunction::with_exec(h, DEFAULT_OSC_SAMPLES, Exec::default());
    let var_1_r = s.var_p_r(Exponent::Finite(1.0), r, &eps);
    let var_p_r = s.var_p_r(Exponent::Finite(p), r, &eps);
    let vp = universal_p_variation(h, p, DEFAULT_OSC_SAMPLES);
    let slack = 1e-12 * (1.0 + vp.value);
    VariationChain {
        p,
        var_1_r,
        var_p_r,
        var_p: vp.value,
        holds: var_1_r <= var_p_r + slack && var_p_r <= 2f64.powf(r) * vp.value + slack,
        certified: !vp.is_lower_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Brute force over every subdivision (subset of grid points, in order).
    fn brute_force_p_variation(vals: &[f64], p: f64) -> f64 {
        let n = vals.len();
        let mut best = vec![0.0f64; n];
        for j in 1..n {
            for i in 0..j {
                best[j] = best[j].max(best[i] + (vals[j] - vals[i]).abs().powf(p));
            }
        }
        best.into_iter().fold(0.0, f64::max).powf(1.0 / p)
    }

    #[test]
    fn identity_variations() {
        let h = Observable1D::identity();
        let r1 = universal_p_variation(&h, 1.0, 64);
        assert!((r1.value - 1.0).abs() < 1e-15);
        assert!(!r1.is_lower_bound);
        let r2 = universal_p_variation(&h, 2.0, 64);
        assert!((r2.value - 1.0).abs() < 1e-15);
        // brute-force oracle on the 64-cell grid
        let vals: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        assert!((brute_force_p_variation(&vals, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jump_variation_has_straddling_witness() {
        let h = Observable1D::step_at(0.5);
        let r = universal_p_variation(&h, 1.0, 64);
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(r.witness.iter().any(|&x| x < 0.5) && r.witness.iter().any(|&x| x >= 0.5));
    }

    #[test]
    fn untagged_grid_matches_brute_force() {
        let h = Observable1D::new(|x| (7.0 * x).sin() + 0.3 * (23.0 * x).cos());
        for &p in &[1.0, 1.5, 2.0, 3.0] {
            let r = universal_p_variation(&h, p, 64);
            let vals: Vec<f64> = (0..=64).map(|i| h.eval(i as f64 / 64.0)).collect();
            let bf = brute_force_p_variation(&vals, p);
            assert!(r.is_lower_bound);
            assert!((r.value - bf).abs() < 1e-12, "p={p}: {} vs {bf}", r.value);
            assert!((p_variation_on(&h, p, &r.witness) - r.value).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_is_monotone() {
        let h = Observable1D::new(|x| (9.0 * x).sin() * x);
        let f = Observable2D::new(|x, y| (5.0 * x * y).sin() + x * x);
        let mut last = (0.0, 0.0, 0.0);
        for k in 6..=8 {
            let n = 1 << k;
            let v1 = universal_p_variation(&h, 1.0, n).value;
            let v2 = universal_p_variation(&h, 2.0, n).value;
            let vs = var_square(&f, n).value;
            assert!(v1 >= last.0 - 1e-15 && v2 >= last.1 - 1e-15 && vs >= last.2 - 1e-15);
            last = (v1, v2, vs);
        }
    }

    #[test]
    fn witness_lp_is_nonincreasing_in_p() {
        let h = Observable1D::new(|x| (11.0 * x).cos());
        let w = universal_p_variation(&h, 1.0, 256).witness;
        let mut prev = f64::INFINITY;
        for &p in &[1.0, 1.5, 2.0, 4.0] {
            let v = p_variation_on(&h, p, &w);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn var_square_examples() {
        assert_eq!(var_square(&Observable2D::new(|_, y| y), 64).value, 0.0);
        assert!((var_square(&Observable2D::new(|x, _| x), 64).value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn var_square_below_lipschitz_constant() {
        let f = Observable2D::new(|x, y| 0.5 * (3.0 * x + y).sin()).with_lipschitz(2.0);
        assert!(var_square(&f, 256).value <= f.lipschitz().unwrap());
    }

    #[test]
    fn vertical_lip_examples() {
        assert_eq!(vertical_lip_norm(&Observable2D::new(|_, _| 1.0), 64), 1.0);
        assert!((vertical_lip_norm(&Observable2D::new(|_, y| y), 64) - 2.0).abs() < 1e-12);
        let f = Observable2D::new(|_, y| (2.0 * PI * y).sin() / 2.0);
        assert!((vertical_lip_norm(&f, 1024) - (0.5 + PI)).abs() < 1e-3);
        let declared = Observable2D::new(|_, y| y).with_vertical_lip(1.0, 1.0);
        assert_eq!(vertical_lip_norm(&declared, 2), 2.0);
    }

    #[test]
    fn osc_of_identity_matches_closed_form() {
        let h = Observable1D::identity();
        let eps = dyadic_epsilons(8);
        let one = osc_p_profile(&h, &eps, 1.0, 1 << 12).unwrap();
        let inf = osc_p_profile(&h, &eps, f64::INFINITY, 1 << 12).unwrap();
        for ((e, o1), oi) in eps.iter().zip(&one).zip(&inf) {
            // ∫ min(x+ε,1) - max(x-ε,0) dx = 2ε - ε²
            let exact = 2.0 * e - e * e;
            assert!((o1 - exact).abs() <= 0.02 * exact);
            assert!((oi - 2.0 * e).abs() <= 0.02 * 2.0 * e);
        }
    }

    #[test]
    fn osc_profile_properties() {
        let h = Observable1D::new(|x| if x < 0.3 { x * x } else { (6.0 * x).sin() });
        let mut eps = dyadic_epsilons(10);
        eps.reverse();
        let o1 = osc_p_profile(&h, &eps, 1.0, 4096).unwrap();
        let o3 = osc_p_profile(&h, &eps, 3.0, 4096).unwrap();
        for w in o1.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for (a, b) in o1.iter().zip(&o3) {
            assert!(b >= a);
        }
        let c = osc_p_profile(&Observable1D::constant(2.0), &eps, 1.0, 512).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        assert!(matches!(
            osc_p_profile(&h, &[0.7], 1.0, 64),
            Err(Error::InvalidEpsilon { .. })
        ));
    }

    #[test]
    fn norm_p_r_examples() {
        let eps = dyadic_epsilons(12);
        let c = norm_p_r(&Observable1D::constant(-3.0), 2.0, 0.5, &eps).unwrap();
        assert_eq!(c.variation, 0.0);
        assert!((c.value() - 3.0).abs() < 1e-12);
        let x = norm_p_r(&Observable1D::identity(), 1.0, 1.0, &eps).unwrap();
        // sup_ε (2 - ε) over the radii supplied
        let smallest = eps[eps.len() - 1];
        assert!((x.variation - (2.0 - smallest)).abs() < 1e-9);
        assert!((x.value() - 2.5).abs() < 1e-3);
    }

    #[test]
    fn chain_examples() {
        let c = compare_variations(&Observable1D::identity(), 2.0);
        assert!(c.holds && c.certified);
        assert!(c.var_p_r <= 2f64.sqrt() + 1e-12);
        let c = compare_variations(&Observable1D::constant(1.0), 2.0);
        assert_eq!((c.var_1_r, c.var_p_r, c.var_p), (0.0, 0.0, 0.0));
        let c = compare_variations(&Observable1D::step_at(0.5), 1.0);
        assert!(c.holds && c.certified);
        assert!((c.var_p - 1.0).abs() < 1e-15);
        assert!((c.var_p_r - 2.0).abs() < 1e-9);
    }

    #[test]
    fn report_json_shape() {
        let r = universal_p_variation(&Observable1D::identity(), 1.0, 4);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["norm", "value", "grid", "is_lower_bound", "witness"] {
            assert!(v.get(key).is_some());
        }
    }
}
