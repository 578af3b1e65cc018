//! Piecewise monotone, piecewise expanding interval maps.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A point is treated as sitting on a cut when it lies this close to one.
pub const CUT_TOLERANCE: f64 = 4.0 * f64::EPSILON;

const BISECTION_MAX_ITER: usize = 200;
const EXPANSION_SAMPLES: usize = 256;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed-form description of one monotone branch.
#[derive(Clone)]
pub enum BranchKind {
    /// `slope * x + offset`.
    Affine { slope: f64, offset: f64 },
    /// `offset + sign * (scale * |x - center|)^exponent`.
    Power {
        center: f64,
        scale: f64,
        exponent: f64,
        offset: f64,
        sign: f64,
    },
    /// Arbitrary monotone C¹ branch, inverted by bisection.
    Custom { value: RealFn, derivative: RealFn },
}

impl fmt::Debug for BranchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchKind::Affine { slope, offset } => f
                .debug_struct("Affine")
                .field("slope", slope)
                .field("offset", offset)
                .finish(),
            BranchKind::Power {
                center,
                scale,
                exponent,
                offset,
                sign,
            } => f
                .debug_struct("Power")
                .field("center", center)
                .field("scale", scale)
                .field("exponent", exponent)
                .field("offset", offset)
                .field("sign", sign)
                .finish(),
            BranchKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// One branch `T_i` of the map, living on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Branch {
    lo: f64,
    hi: f64,
    kind: BranchKind,
}

impl Branch {
    pub fn new(lo: f64, hi: f64, kind: BranchKind) -> Self {
        Self { lo, hi, kind }
    }

    pub fn affine(lo: f64, hi: f64, slope: f64, offset: f64) -> Self {
        Self::new(lo, hi, BranchKind::Affine { slope, offset })
    }

    pub fn custom(
        lo: f64,
        hi: f64,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            lo,
            hi,
            BranchKind::Custom {
                value: Arc::new(value),
                derivative: Arc::new(derivative),
            },
        )
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn kind(&self) -> &BranchKind {
        &self.kind
    }

    /// Branch formula, also valid at (and as the one-sided limit towards) the
    /// endpoints of the domain.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            BranchKind::Affine { slope, offset } => slope * x + offset,
            BranchKind::Power {
                center,
                scale,
                exponent,
                offset,
                sign,
            } => offset + sign * (scale * (x - center).abs()).powf(*exponent),
            BranchKind::Custom { value, .. } => value(x),
        }
    }

    /// Signed derivative. At the singular end of a power branch with
    /// exponent below one this is an infinite sentinel.
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            BranchKind::Affine { slope, .. } => *slope,
            BranchKind::Power {
                center,
                scale,
                exponent,
                sign,
                ..
            } => {
                let d = x - center;
                let mid = 0.5 * (self.lo + self.hi) - center;
                let side = if d > 0.0 || (d == 0.0 && mid > 0.0) {
                    1.0
                } else {
                    -1.0
                };
                let u = scale * d.abs();
                let mag = if u == 0.0 && *exponent < 1.0 {
                    f64::INFINITY
                } else {
                    exponent * scale * u.powf(exponent - 1.0)
                };
                sign * side * mag
            }
            BranchKind::Custom { derivative, .. } => derivative(x),
        }
    }

    pub fn is_increasing(&self) -> bool {
        self.eval(self.hi) >= self.eval(self.lo)
    }

    /// The closed image interval `[min, max]` of the branch.
    pub fn image(&self) -> (f64, f64) {
        let (a, b) = (self.eval(self.lo), self.eval(self.hi));
        (a.min(b), a.max(b))
    }

    /// The unique `x` in the branch domain with `T_i(x) = y`, if `y` lies in
    /// the image.
    pub fn invert(&self, y: f64) -> Option<f64> {
        let (lo_img, hi_img) = self.image();
        if y < lo_img || y > hi_img {
            return None;
        }
        let x = match &self.kind {
            BranchKind::Affine { slope, offset } => (y - offset) / slope,
            BranchKind::Power {
                center,
                scale,
                exponent,
                offset,
                sign,
            } => {
                let u = ((y - offset) * sign).max(0.0).powf(1.0 / exponent);
                let side = if self.lo >= *center { 1.0 } else { -1.0 };
                center + side * u / scale
            }
            BranchKind::Custom { value, .. } => self.bisect(value.as_ref(), y),
        };
        Some(x.clamp(self.lo, self.hi))
    }

    fn bisect(&self, value: &(dyn Fn(f64) -> f64 + Send + Sync), y: f64) -> f64 {
        let increasing = self.is_increasing();
        let (mut a, mut b) = (self.lo, self.hi);
        for _ in 0..BISECTION_MAX_ITER {
            let m = 0.5 * (a + b);
            let below = value(m) < y;
            if below == increasing {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 2.0 * f64::EPSILON * m.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        0.5 * (a + b)
    }
}

/// A branch preimage of some point under `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub branch: usize,
    pub x: f64,
    /// `|T'|` at the preimage; may be infinite at a singular endpoint.
    pub expansion: f64,
}

/// An interval map with finitely many monotone C¹ branches whose derivative
/// is bounded away from one in modulus.
#[derive(Debug, Clone)]
pub struct PiecewiseExpandingMap {
    name: String,
    branches: Vec<Branch>,
    cuts: Vec<f64>,
    expansion_floor: f64,
}

impl PiecewiseExpandingMap {
    /// Validates the branches (contiguous cover of `[0,1]`, images inside
    /// `[0,1]`, constant derivative sign, expansion above one) and builds
    /// the map.
    pub fn new(name: impl Into<String>, branches: Vec<Branch>) -> Result<Self> {
        let name = name.into();
        if branches.is_empty() {
            return Err(Error::InvalidParams(format!("{name}: no branches")));
        }
        if branches[0].lo != 0.0 || branches[branches.len() - 1].hi != 1.0 {
            return Err(Error::InvalidParams(format!(
                "{name}: branches must cover [0, 1]"
            )));
        }
        for w in branches.windows(2) {
            if w[0].hi != w[1].lo || w[0].lo >= w[0].hi {
                return Err(Error::InvalidParams(format!(
                    "{name}: branch domains must be contiguous and ordered"
                )));
            }
        }
        let mut floor = f64::INFINITY;
        for (i, b) in branches.iter().enumerate() {
            let (lo_img, hi_img) = b.image();
            if lo_img < -1e-12 || hi_img > 1.0 + 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "{name}: branch {i} maps outside [0, 1]"
                )));
            }
            let sign = if b.is_increasing() { 1.0 } else { -1.0 };
            for k in 0..=EXPANSION_SAMPLES {
                let t = k as f64 / EXPANSION_SAMPLES as f64;
                let x = b.lo + t * (b.hi - b.lo);
                let d = b.derivative(x);
                if d * sign <= 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "{name}: branch {i} derivative changes sign near x = {x}"
                    )));
                }
                floor = floor.min(d.abs());
            }
        }
        if floor <= 1.0 {
            return Err(Error::InvalidParams(format!(
                "{name}: not expanding (inf |T'| = {floor})"
            )));
        }
        let cuts = branches[1..].iter().map(|b| b.lo).collect();
        Ok(Self {
            name,
            branches,
            cuts,
            expansion_floor: floor,
        })
    }

    /// `x ↦ 2x mod 1`.
    pub fn doubling() -> Self {
        Self::new(
            "doubling",
            vec![
                Branch::affine(0.0, 0.5, 2.0, 0.0),
                Branch::affine(0.5, 1.0, 2.0, -1.0),
            ],
        )
        .expect("doubling map is valid")
    }

    /// The full tent map `1 - |2x - 1|`.
    pub fn tent() -> Self {
        Self::new(
            "tent",
            vec![
                Branch::affine(0.0, 0.5, 2.0, 0.0),
                Branch::affine(0.5, 1.0, -2.0, 2.0),
            ],
        )
        .expect("tent map is valid")
    }

    /// The one-dimensional Lorenz-like map: `1 - |2x-1|^α` left of `1/2`,
    /// `|2x-1|^α` right of it. Both branches are full and increasing and
    /// `inf |T'| = 2α`.
    pub fn lorenz(alpha: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::InvalidParams(format!(
                "lorenz base needs alpha in (1/2, 1), got {alpha}"
            )));
        }
        let power = |offset: f64, sign: f64| BranchKind::Power {
            center: 0.5,
            scale: 2.0,
            exponent: alpha,
            offset,
            sign,
        };
        Self::new(
            "lorenz",
            vec![
                Branch::new(0.0, 0.5, power(1.0, -1.0)),
                Branch::new(0.5, 1.0, power(0.0, 1.0)),
            ],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Interior cut points `c_1 < ... < c_n`.
    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Sampled `inf |T'|` over all branches, endpoints included.
    pub fn expansion_floor(&self) -> f64 {
        self.expansion_floor
    }

    pub fn is_at_cut(&self, x: f64) -> bool {
        self.cuts.iter().any(|c| (x - c).abs() <= CUT_TOLERANCE)
    }

    /// Index of the branch whose open domain contains `x`.
    pub fn branch_index(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParams(format!("x = {x} outside [0, 1]")));
        }
        if self.is_at_cut(x) {
            return Err(Error::UndefinedAtCut { x });
        }
        Ok(self.cuts.partition_point(|&c| c < x))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let i = self.branch_index(x)?;
        Ok(self.branches[i].eval(x).clamp(0.0, 1.0))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let i = self.branch_index(x)?;
        Ok(self.branches[i].derivative(x))
    }

    /// All branch preimages of `y`, one per branch whose image contains it.
    pub fn preimages(&self, y: f64) -> Vec<Preimage> {
        self.branches
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                b.invert(y).map(|x| Preimage {
                    branch: i,
                    x,
                    expansion: b.derivative(x).abs(),
                })
            })
            .collect()
    }

    /// Moves `x` off a cut into the interior of the branch to its right (or
    /// left for the last cut edge case).
    pub fn nudge(&self, x: f64, amount: f64) -> f64 {
        if self.is_at_cut(x) {
            (x + amount).min(1.0)
        } else {
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_eval_and_cut() {
        let t = PiecewiseExpandingMap::doubling();
        assert!((t.eval(0.3).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(t.eval(0.5), Err(Error::UndefinedAtCut { x: 0.5 }));
        assert_eq!(t.eval(1.0).unwrap(), 1.0);
        assert_eq!(t.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn lorenz_eval_matches_formula() {
        let t = PiecewiseExpandingMap::lorenz(0.75).unwrap();
        // independent: 0.5^0.75 = 2^-0.75
        let expected = (-0.75f64 * std::f64::consts::LN_2).exp();
        assert!((t.eval(0.75).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.594604).abs() < 1e-6);
        assert_eq!(t.eval(1.0).unwrap(), 1.0);
        assert_eq!(t.eval(0.0).unwrap(), 0.0);
        assert!(t.eval(0.5 + 1e-12).unwrap() < 1e-8);
        assert!((t.expansion_floor() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn lorenz_derivative_blows_up_at_cut() {
        let t = PiecewiseExpandingMap::lorenz(0.75).unwrap();
        assert_eq!(t.branches()[1].derivative(0.5), f64::INFINITY);
        assert!(t.derivative(0.5 + 1e-9).unwrap() > 1e2);
    }

    #[test]
    fn invalid_alpha() {
        assert!(matches!(
            PiecewiseExpandingMap::lorenz(0.4),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn non_expanding_branch_rejected() {
        let r = PiecewiseExpandingMap::new("slow", vec![Branch::affine(0.0, 1.0, 1.0, 0.0)]);
        assert!(matches!(r, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn doubling_preimages() {
        let t = PiecewiseExpandingMap::doubling();
        let pre = t.preimages(0.6);
        assert_eq!(pre.len(), 2);
        assert_eq!(pre[0].branch, 0);
        assert!((pre[0].x - 0.3).abs() < 1e-15);
        assert!((pre[1].x - 0.8).abs() < 1e-15);
        assert!(pre.iter().all(|p| p.expansion == 2.0));
    }

    #[test]
    fn lorenz_preimages_round_trip() {
        let t = PiecewiseExpandingMap::lorenz(0.75).unwrap();
        let y = 0.594604;
        let pre = t.preimages(y);
        assert_eq!(pre.len(), 2);
        // right branch: |2x-1|^0.75 = y  =>  x = (1 + y^(4/3)) / 2
        let right = 0.5 * (1.0 + y.powf(4.0 / 3.0));
        assert!((pre[1].x - right).abs() < 1e-12);
        assert!((pre[1].x - 0.75).abs() < 1e-6);
        // left branch: 1 - (1-2x)^0.75 = y
        let left = 0.5 * (1.0 - (1.0 - y).powf(4.0 / 3.0));
        assert!((pre[0].x - left).abs() < 1e-12);
        for p in pre {
            assert!((t.eval(p.x).unwrap() - y).abs() < 1e-12);
        }
    }

    #[test]
    fn non_full_branch_omitted() {
        let t = PiecewiseExpandingMap::new(
            "partial",
            vec![
                Branch::affine(0.0, 0.5, 1.5, 0.0),
                Branch::affine(0.5, 1.0, 2.0, -1.0),
            ],
        )
        .unwrap();
        let pre = t.preimages(0.9);
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].branch, 1);
    }

    #[test]
    fn custom_branch_bisection() {
        // full increasing branch with T' >= 2 - 0.2π > 1
        use std::f64::consts::PI;
        let t = PiecewiseExpandingMap::new(
            "wobble",
            vec![
                Branch::custom(
                    0.0,
                    0.5,
                    |x| 2.0 * x + 0.05 * (4.0 * PI * x).sin(),
                    |x| 2.0 + 0.2 * PI * (4.0 * PI * x).cos(),
                ),
                Branch::affine(0.5, 1.0, 2.0, -1.0),
            ],
        )
        .unwrap();
        for &y in &[0.0, 0.1, 0.37, 0.99, 1.0] {
            for p in t.preimages(y) {
                assert!((t.branches()[p.branch].eval(p.x) - y).abs() < 1e-12);
            }
        }
    }
}
