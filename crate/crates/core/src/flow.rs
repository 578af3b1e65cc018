//! The linearized flow near a Lorenz-like singularity, its passage map and
//! passage time, and the suspension semiflow over a base system with a roof
//! function, including flow-level hitting times and the flow logarithm law.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{line_fit, median, LineFit};
use crate::io::csv_table;
use crate::maps::{sup_distance, Dynamics, Point, System};
use crate::rng::{self, Stream};
use crate::stats::{
    dimension_formula, loglaw_exponent_with, sample_orbit, LoglawConfig, LoglawReport, OrbitConfig,
    Start, MAX_MISSING_FRACTION,
};

/// Eigenvalues `λ₁ > 0 > λ₃ > λ₂` of the linearized vector field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl SingularityParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        let p = Self {
            lambda1,
            lambda2,
            lambda3,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks `λ₂ < λ₃ < 0 < -λ₃ < λ₁`.
    pub fn validate(&self) -> Result<()> {
        let &Self {
            lambda1: l1,
            lambda2: l2,
            lambda3: l3,
        } = self;
        if !(l2 < l3 && l3 < 0.0 && -l3 < l1) || ![l1, l2, l3].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "eigenvalues ({l1}, {l2}, {l3}) are not Lorenz-like"
            )));
        }
        Ok(())
    }

    /// `-λ₃/λ₁ ∈ (0,1)`.
    pub fn alpha(&self) -> f64 {
        -self.lambda3 / self.lambda1
    }

    /// `-λ₂/λ₁`.
    pub fn beta(&self) -> f64 {
        -self.lambda2 / self.lambda1
    }

    /// `λ₁ + λ₂ < 0`.
    pub fn is_dissipative(&self) -> bool {
        self.lambda1 + self.lambda2 < 0.0
    }
}

/// `(x e^{λ₁t}, y e^{λ₂t}, z e^{λ₃t})`.
pub fn linear_flow(params: &SingularityParams, p0: [f64; 3], t: f64) -> [f64; 3] {
    [
        p0[0] * (params.lambda1 * t).exp(),
        p0[1] * (params.lambda2 * t).exp(),
        p0[2] * (params.lambda3 * t).exp(),
    ]
}

/// Where an orbit entering at `(x₁, x₂, 1)` leaves the box `|x| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularExit {
    /// `x₂ |x₁|^β`.
    pub x2: f64,
    /// `|x₁|^α`.
    pub x3: f64,
    /// `sign(x₁)`: the exit face `x = ±1`.
    pub side: i8,
}

pub fn singular_return(params: &SingularityParams, x1: f64, x2: f64) -> Result<SingularExit> {
    if x1 == 0.0 {
        return Err(Error::OnStableManifold);
    }
    if x1.abs() > 1.0 || x2.abs() > 1.0 {
        return Err(Error::InvalidParams(format!(
            "ingoing point ({x1}, {x2}) outside the unit box"
        )));
    }
    let u = x1.abs();
    Ok(SingularExit {
        x2: x2 * u.powf(params.beta()),
        x3: u.powf(params.alpha()),
        side: if x1 > 0.0 { 1 } else { -1 },
    })
}

/// `-log|x₁| / λ₁`.
pub fn singular_return_time(params: &SingularityParams, x1: f64) -> Result<f64> {
    if x1 == 0.0 {
        return Err(Error::OnStableManifold);
    }
    if x1.abs() > 1.0 {
        return Err(Error::InvalidParams(format!(
            "|x1| = {} exceeds 1",
            x1.abs()
        )));
    }
    Ok(-x1.abs().ln() / params.lambda1)
}

/// `∫_{-δ}^{δ} -log|u|/λ₁ du = 2δ(1 - log δ)/λ₁`.
pub fn singular_time_integral(params: &SingularityParams, delta: f64) -> f64 {
    2.0 * delta * (1.0 - delta.ln()) / params.lambda1
}

/// Composite Simpson quadrature of the same integral after `u = δv³`,
/// which removes the logarithmic singularity.
pub fn singular_time_quadrature(params: &SingularityParams, delta: f64, panels: usize) -> f64 {
    let n = 2 * panels.max(1);
    let h = 1.0 / n as f64;
    let g = |v: f64| {
        if v == 0.0 {
            0.0
        } else {
            3.0 * delta * v * v * -(delta * v * v * v).ln()
        }
    };
    let mut s = g(0.0) + g(1.0);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    2.0 * s * h / 3.0 / params.lambda1
}

/// Return time to the section, as a function of the base point.
#[derive(Clone)]
pub enum Roof {
    Constant(f64),
    /// `τ₀ + -log|x - c| / λ₁`.
    Singular {
        tau0: f64,
        cut: f64,
        lambda1: f64,
    },
    Custom {
        f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
        floor: f64,
    },
}

impl fmt::Debug for Roof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Roof::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Roof::Singular { tau0, cut, lambda1 } => f
                .debug_struct("Singular")
                .field("tau0", tau0)
                .field("cut", cut)
                .field("lambda1", lambda1)
                .finish(),
            Roof::Custom { floor, .. } => f
                .debug_struct("Custom")
                .field("floor", floor)
                .finish_non_exhaustive(),
        }
    }
}

impl Roof {
    pub fn eval(&self, q: Point) -> f64 {
        match self {
            Roof::Constant(c) => *c,
            Roof::Singular { tau0, cut, lambda1 } => tau0 - (q[0] - cut).abs().ln() / lambda1,
            Roof::Custom { f, .. } => f(q),
        }
    }

    /// A lower bound `τ₀` for the roof.
    pub fn floor(&self) -> f64 {
        match self {
            Roof::Constant(c) => *c,
            Roof::Singular { tau0, .. } => *tau0,
            Roof::Custom { floor, .. } => *floor,
        }
    }

    /// The minimum over `[0,1]`, which bounds the heights a target may use.
    pub fn minimum(&self) -> f64 {
        match self {
            Roof::Constant(c) => *c,
            Roof::Singular { tau0, cut, lambda1 } => tau0 - cut.max(1.0 - cut).ln() / lambda1,
            Roof::Custom { floor, .. } => *floor,
        }
    }
}

/// A point of the suspension: a base point and a height below the roof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub base: Point,
    pub height: f64,
}

impl FlowPoint {
    pub fn new(base: Point, height: f64) -> Self {
        Self { base, height }
    }
}

/// The semiflow moving up at unit speed under the roof and jumping from
/// `(q, τ(q))` to `(F(q), 0)`.
#[derive(Debug, Clone)]
pub struct SuspensionFlow {
    base: Arc<System>,
    roof: Roof,
}

impl SuspensionFlow {
    pub fn new(base: System, roof: Roof) -> Result<Self> {
        if !(roof.floor() > 0.0) {
            return Err(Error::InvalidParams("roof floor must be positive".into()));
        }
        Ok(Self {
            base: Arc::new(base),
            roof,
        })
    }

    pub fn constant(base: System, height: f64) -> Result<Self> {
        Self::new(base, Roof::Constant(height))
    }

    pub fn base(&self) -> &System {
        &self.base
    }

    pub fn roof(&self) -> &Roof {
        &self.roof
    }

    pub fn roof_at(&self, q: Point) -> f64 {
        self.roof.eval(q)
    }

    fn distance(&self, a: Point, b: Point) -> f64 {
        if self.base.dim() == 1 {
            (a[0] - b[0]).abs()
        } else {
            sup_distance(a, b)
        }
    }

    /// `max(base distance, |Δheight|)`.
    pub fn distance_between(&self, a: &FlowPoint, b: &FlowPoint) -> f64 {
        self.distance(a.base, b.base)
            .max((a.height - b.height).abs())
    }

    /// Checks `r ≤ s₀` and `s₀ + r ≤ min τ`, so the ball stays clear of
    /// the floor and the roof.
    pub fn check_target(&self, target: &FlowPoint, r: f64) -> Result<()> {
        let s0 = target.height;
        if !(r > 0.0) || s0 < r || s0 + r > self.roof.minimum() {
            return Err(Error::InvalidTarget(format!(
                "height {s0} with radius {r} must satisfy r <= s0 and s0 + r <= {}",
                self.roof.minimum()
            )));
        }
        if self.base.base().is_at_cut(target.base[0]) {
            return Err(Error::OnStableManifold);
        }
        Ok(())
    }
}

/// `τ₀ + -log|x - c|/λ₁` over a base with a single cut `c`.
pub fn make_lorenz_roof(
    params: &SingularityParams,
    base: System,
    tau0: f64,
) -> Result<SuspensionFlow> {
    params.validate()?;
    let cuts = base.base().cuts();
    if cuts.len() != 1 {
        return Err(Error::InvalidParams(format!(
            "a singular roof needs exactly one cut, found {}",
            cuts.len()
        )));
    }
    if !(tau0 > 0.0) {
        return Err(Error::InvalidParams(format!(
            "tau0 = {tau0} must be positive"
        )));
    }
    let cut = cuts[0];
    SuspensionFlow::new(
        base,
        Roof::Singular {
            tau0,
            cut,
            lambda1: params.lambda1,
        },
    )
}

/// `X_t(p)`; an orbit reaching a cut fails with `OrbitHitsCut`.
pub fn flow_evolve(flow: &SuspensionFlow, p: FlowPoint, t: f64) -> Result<FlowPoint> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "time {t} must be nonnegative"
        )));
    }
    let mut q = p.base;
    let mut h = p.height;
    let mut left = t;
    let mut step = 0;
    loop {
        let remaining = flow.roof_at(q) - h;
        if left < remaining {
            return Ok(FlowPoint::new(q, h + left));
        }
        left -= remaining;
        q = flow.base.step(q).map_err(|_| Error::OrbitHitsCut {
            x0: p.base[0],
            step,
        })?;
        h = 0.0;
        step += 1;
    }
}

/// First entrance time into every ball `B_{r_k}(target)` along the flow
/// orbit of `start` (radii decreasing). Each base step adds `jitter`.
pub fn flow_first_hits(
    flow: &SuspensionFlow,
    start: FlowPoint,
    target: &FlowPoint,
    radii: &[f64],
    horizon: f64,
    jitter: f64,
    rng: &mut Stream,
) -> Vec<Option<f64>> {
    let mut hits = vec![None; radii.len()];
    let mut next = 0;
    let mut elapsed = 0.0;
    let mut q = start.base;
    let mut h = start.height;
    let mut nudged = 0;
    let s0 = target.height;
    while next < radii.len() && elapsed <= horizon {
        let d = flow.distance(q, target.base);
        while next < radii.len() && d < radii[next] && h < s0 + radii[next] {
            let t = elapsed + (s0 - radii[next] - h).max(0.0);
            if t > horizon {
                return hits;
            }
            hits[next] = Some(t);
            next += 1;
        }
        elapsed += flow.roof_at(q) - h;
        q = crate::stats::advance_point(&*flow.base, q, jitter, rng, &mut nudged);
        h = 0.0;
    }
    hits
}

/// `inf { t ≥ 0 : X_t(p) ∈ B_r(target) }` on the exact orbit.
pub fn flow_hitting_time(
    flow: &SuspensionFlow,
    p: FlowPoint,
    target: &FlowPoint,
    r: f64,
    horizon: f64,
) -> Result<f64> {
    flow.check_target(target, r)?;
    let mut rng = rng::stream(0, 0);
    flow_first_hits(flow, p, target, &[r], horizon, 0.0, &mut rng)[0]
        .ok_or(Error::NotHit { horizon })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowLoglawReport {
    pub target: FlowPoint,
    pub radii: Vec<f64>,
    pub log_tau_flow_median: Vec<f64>,
    pub missing_fraction: Vec<f64>,
    pub dropped_radii: Vec<f64>,
    pub fit: LineFit,
    pub slope_flow: f64,
    pub section: LoglawReport,
    pub slope_section: f64,
    /// `1 + Ψ̂/Φ̂` on a skew-product base.
    pub d_formula: Option<f64>,
    /// `log τ/(-log r)` per sample at the smallest kept radius.
    pub smallest_radius_ratios: Vec<f64>,
}

impl FlowLoglawReport {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["r", "median_log_tau_flow", "median_log_tau_section"],
            (0..self.radii.len()).map(|k| {
                vec![
                    self.radii[k],
                    self.log_tau_flow_median[k],
                    self.section.log_tau_median[k],
                ]
            }),
        )
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope_flow": self.slope_flow,
            "slope_section": self.slope_section,
            "d_formula": self.d_formula,
            "r2": self.fit.r_squared,
            "dropped_radii": self.dropped_radii,
        })
    }
}

/// Flow log-law slope at `target` with the section-level exponent computed
/// from the same per-sample streams, so both see the same base orbits.
pub fn flow_loglaw(
    flow: &SuspensionFlow,
    target: &FlowPoint,
    radii: &[f64],
    cfg: LoglawConfig,
    singularity: Option<&SingularityParams>,
) -> Result<FlowLoglawReport> {
    if let Some(p) = singularity {
        p.validate()?;
        if !p.is_dissipative() {
            return Err(Error::InvalidParams(
                "flow log-law needs λ₁ + λ₂ < 0".into(),
            ));
        }
    }
    if radii.is_empty() {
        return Err(Error::InvalidParams("no radii".into()));
    }
    flow.check_target(target, radii[0])?;
    let section = loglaw_exponent_with(&*flow.base, target.base, radii, cfg)?;
    let horizon = cfg.horizon as f64 * flow.roof.floor();
    let hits = cfg.exec.map(cfg.samples, |i| {
        let mut rng = rng::stream(cfg.seed, i as u64 + 1);
        let start = crate::stats::burn_in_start(&*flow.base, cfg.burn_in, cfg.jitter, &mut rng);
        flow_first_hits(
            flow,
            FlowPoint::new(start, 0.0),
            target,
            radii,
            horizon,
            cfg.jitter,
            &mut rng,
        )
    });
    let mut log_tau_flow_median = Vec::with_capacity(radii.len());
    let mut missing_fraction = Vec::with_capacity(radii.len());
    let mut dropped_radii = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut smallest_kept = None;
    for (k, &r) in radii.iter().enumerate() {
        let logs: Vec<f64> = hits
            .iter()
            .map(|h| h[k].map_or(f64::INFINITY, |t| t.max(f64::MIN_POSITIVE).ln()))
            .collect();
        let missing = logs.iter().filter(|v| v.is_infinite()).count() as f64 / logs.len() as f64;
        missing_fraction.push(missing);
        if missing > MAX_MISSING_FRACTION {
            dropped_radii.push(r);
            log_tau_flow_median.push(f64::NAN);
            continue;
        }
        let med = median(&logs).expect("samples nonempty");
        log_tau_flow_median.push(med);
        xs.push(-r.ln());
        ys.push(med);
        smallest_kept = Some(k);
    }
    let k_small = smallest_kept.ok_or(Error::AllMissing)?;
    let fit = line_fit(&xs, &ys).ok_or(Error::AllMissing)?;
    let minus_log_r = -radii[k_small].ln();
    let smallest_radius_ratios = hits
        .iter()
        .map(|h| h[k_small].map_or(f64::NAN, |t| t.ln() / minus_log_r))
        .collect();
    let d_formula = match flow.base.as_skew() {
        Some(f) => {
            let orbit = sample_orbit(
                f,
                Start::Random,
                OrbitConfig {
                    length: 1_000_000,
                    seed: cfg.seed,
                    jitter: cfg.jitter,
                    ..Default::default()
                },
            )?;
            Some(dimension_formula(f, &orbit)?.value)
        }
        None => None,
    };
    Ok(FlowLoglawReport {
        target: *target,
        radii: radii.to_vec(),
        log_tau_flow_median,
        missing_fraction,
        dropped_radii,
        slope_flow: fit.slope,
        fit,
        slope_section: section.slope,
        section,
        d_formula,
        smallest_radius_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{LorenzModelParams, PiecewiseExpandingMap, SkewProductMap};
    use crate::stats::{geometric_radii, hitting_time};
    use rand::Rng;

    fn p() -> SingularityParams {
        SingularityParams::new(1.0, -2.0, -0.5).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SingularityParams::new(1.0, -2.0, -0.75).is_ok());
        assert!(SingularityParams::new(1.0, -0.5, -2.0).is_err());
        assert!(SingularityParams::new(1.0, -2.0, -1.5).is_err());
        assert!(SingularityParams::new(-1.0, -2.0, -0.5).is_err());
        let q = SingularityParams::new(1.0, -2.0, -0.75).unwrap();
        assert_eq!((q.alpha(), q.beta()), (0.75, 2.0));
    }

    #[test]
    fn linear_flow_examples() {
        let e = std::f64::consts::E;
        let x = linear_flow(&p(), [1.0, 1.0, 1.0], 1.0);
        assert!((x[0] - e).abs() < 1e-15 && (x[1] - (-2f64).exp()).abs() < 1e-15);
        assert!((x[2] - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(linear_flow(&p(), [0.3, -0.2, 0.7], 0.0), [0.3, -0.2, 0.7]);
    }

    #[test]
    fn linear_flow_group_property() {
        let mut r = rng::stream(1, 0);
        for _ in 0..100 {
            let p0 = [
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
            ];
            let (s, t) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let a = linear_flow(&p(), p0, s + t);
            let b = linear_flow(&p(), linear_flow(&p(), p0, s), t);
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() <= 1e-12 * a[i].abs().max(1e-300));
            }
        }
    }

    #[test]
    fn singular_return_examples() {
        let e = singular_return(&p(), 0.25, 0.1).unwrap();
        assert!((e.x2 - 0.00625).abs() < 1e-15 && (e.x3 - 0.5).abs() < 1e-15 && e.side == 1);
        let e = singular_return(&p(), -0.25, 0.0).unwrap();
        assert_eq!((e.x2, e.side), (0.0, -1));
        assert!(matches!(
            singular_return(&p(), 0.0, 0.1),
            Err(Error::OnStableManifold)
        ));
        // the passage agrees with flowing for the passage time
        let t = singular_return_time(&p(), 0.25).unwrap();
        let out = linear_flow(&p(), [0.25, 0.1, 1.0], t);
        let e = singular_return(&p(), 0.25, 0.1).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-10);
        assert!((out[1] - e.x2).abs() < 1e-10 && (out[2] - e.x3).abs() < 1e-10);
    }

    #[test]
    fn singular_time_examples() {
        let one = SingularityParams::new(1.0, -2.0, -0.5).unwrap();
        assert!((singular_return_time(&one, (-2f64).exp()).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(singular_return_time(&one, 1.0).unwrap(), 0.0);
        assert_eq!(singular_return_time(&one, -1.0).unwrap(), 0.0);
        let closed = singular_time_integral(&one, 0.1);
        assert!((closed - 0.660_517_018_598_809).abs() < 1e-12);
        assert!((singular_time_quadrature(&one, 0.1, 2000) - closed).abs() < 1e-6);
    }

    fn lorenz_flow() -> SuspensionFlow {
        let s = SingularityParams::new(1.0, -2.0, -0.75).unwrap();
        let f = SkewProductMap::lorenz(LorenzModelParams {
            alpha: s.alpha(),
            beta: s.beta(),
            kappa: 0.25,
        })
        .unwrap();
        make_lorenz_roof(&s, System::Skew(f), 1.0).unwrap()
    }

    #[test]
    fn lorenz_roof_values() {
        let flow = lorenz_flow();
        let x = 0.5 + (-1.0f64).exp();
        assert!((flow.roof_at([x, 0.3]) - 2.0).abs() < 1e-14);
        let min = (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .filter(|&x| x != 0.5)
            .map(|x| flow.roof_at([x, 0.0]))
            .fold(f64::INFINITY, f64::min);
        assert!((min - (1.0 + 2f64.ln())).abs() < 1e-14);
        assert!((flow.roof().minimum() - min).abs() < 1e-14);
        let doubling_base = System::Interval(PiecewiseExpandingMap::tent());
        assert!(make_lorenz_roof(&p(), doubling_base, 0.0).is_err());
    }

    #[test]
    fn evolve_examples() {
        let t = System::Interval(PiecewiseExpandingMap::doubling());
        let flow = SuspensionFlow::constant(t, 1.0).unwrap();
        let q = FlowPoint::new([0.1, 0.0], 0.0);
        let a = flow_evolve(&flow, q, 0.25).unwrap();
        assert_eq!(a, FlowPoint::new([0.1, 0.0], 0.25));
        let b = flow_evolve(&flow, a, 0.75).unwrap();
        assert_eq!(b.height, 0.0);
        assert!((b.base[0] - 0.2).abs() < 1e-15);
        let c = flow_evolve(&flow, q, 3.5).unwrap();
        assert!((c.base[0] - 0.8).abs() < 1e-15 && c.height == 0.5);
        // additivity on dyadic splits
        for (s, u) in [(0.5, 3.0), (1.25, 2.25), (0.125, 0.875)] {
            let once = flow_evolve(&flow, q, s + u).unwrap();
            let twice = flow_evolve(&flow, flow_evolve(&flow, q, s).unwrap(), u).unwrap();
            assert_eq!(once, twice);
        }
        assert!(matches!(
            flow_evolve(&flow, FlowPoint::new([0.25, 0.0], 0.0), 3.0),
            Err(Error::OrbitHitsCut { .. })
        ));
    }

    #[test]
    fn flow_hitting_examples() {
        let t = PiecewiseExpandingMap::doubling();
        let flow = SuspensionFlow::constant(System::Interval(t.clone()), 1.0).unwrap();
        let target = FlowPoint::new([0.3, 0.0], 0.5);
        assert_eq!(
            flow_hitting_time(&flow, target, &target, 0.05, 10.0).unwrap(),
            0.0
        );
        let start = FlowPoint::new([0.1, 0.0], 0.0);
        assert!(matches!(
            flow_hitting_time(&flow, start, &target, 0.05, 40.0),
            Err(Error::NotHit { .. })
        ));
        // within one roof of the base hitting time
        let start = FlowPoint::new([0.15, 0.0], 0.0);
        let base = hitting_time(&t, [0.15, 0.0], [0.3, 0.0], 0.05, 100).unwrap() as f64;
        let tf = flow_hitting_time(&flow, start, &target, 0.05, 100.0).unwrap();
        assert!((tf - base).abs() <= 1.0, "{tf} vs {base}");
        assert!(matches!(
            flow_hitting_time(&flow, start, &FlowPoint::new([0.3, 0.0], 0.01), 0.05, 10.0),
            Err(Error::InvalidTarget(_))
        ));
    }

    #[test]
    fn constant_roof_flow_loglaw_on_doubling() {
        let t = PiecewiseExpandingMap::doubling();
        let flow = SuspensionFlow::constant(System::Interval(t), 1.0).unwrap();
        let target = FlowPoint::new([0.3141, 0.0], 0.5);
        let radii = geometric_radii(1.0 / 16.0, 0.5, 7);
        let cfg = LoglawConfig {
            samples: 200,
            seed: 4,
            ..Default::default()
        };
        let rep = flow_loglaw(&flow, &target, &radii, cfg, None).unwrap();
        assert!((rep.slope_flow - 1.0).abs() < 0.15, "{}", rep.slope_flow);
        assert!((rep.slope_flow - rep.slope_section).abs() < 0.1);
        assert!(rep.d_formula.is_none());
    }
}
