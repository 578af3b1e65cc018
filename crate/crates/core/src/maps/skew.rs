//! Skew products `F(x, y) = (T(x), G(x, y))` with uniformly contracting fibers.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::interval::PiecewiseExpandingMap;
use super::Point;
use crate::error::{Error, Result};

const LEAF_GRID: usize = 1000;
const CHECK_GRID: usize = 64;

type FiberFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The fiber map `G`. Closed-form families know which branch `x` lies in.
#[derive(Clone)]
pub enum Fiber {
    /// `G(x, y) = c·y + i·(1 - c)/(m - 1)` on branch `i` of `m`.
    Affine { contraction: f64 },
    /// `G(x, y) = 1/2 + s/4 + κ(y - 1/2)|2x - 1|^β`, `s = ±1` by side of `1/2`.
    Lorenz { kappa: f64, beta: f64 },
    /// Arbitrary fiber map with partial derivatives.
    Custom {
        value: FiberFn,
        dx: FiberFn,
        dy: FiberFn,
    },
}

impl fmt::Debug for Fiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fiber::Affine { contraction } => write!(f, "Affine({contraction})"),
            Fiber::Lorenz { kappa, beta } => write!(f, "Lorenz(kappa={kappa}, beta={beta})"),
            Fiber::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl Fiber {
    fn eval(&self, branch: usize, branches: usize, x: f64, y: f64) -> f64 {
        match self {
            Fiber::Affine { contraction } => {
                let step = if branches > 1 {
                    (1.0 - contraction) / (branches - 1) as f64
                } else {
                    0.0
                };
                contraction * y + branch as f64 * step
            }
            Fiber::Lorenz { kappa, beta } => {
                let s = if x > 0.5 { 1.0 } else { -1.0 };
                0.5 + 0.25 * s + kappa * (y - 0.5) * (2.0 * x - 1.0).abs().powf(*beta)
            }
            Fiber::Custom { value, .. } => value(x, y),
        }
    }

    fn dy(&self, x: f64, y: f64) -> f64 {
        match self {
            Fiber::Affine { contraction } => *contraction,
            Fiber::Lorenz { kappa, beta } => kappa * (2.0 * x - 1.0).abs().powf(*beta),
            Fiber::Custom { dy, .. } => dy(x, y),
        }
    }

    fn dx(&self, x: f64, y: f64) -> f64 {
        match self {
            Fiber::Affine { .. } => 0.0,
            Fiber::Lorenz { kappa, beta } => {
                let d = 2.0 * x - 1.0;
                let sgn = if d >= 0.0 { 1.0 } else { -1.0 };
                if *beta == 1.0 {
                    kappa * (y - 0.5) * 2.0 * sgn
                } else {
                    kappa * (y - 0.5) * 2.0 * beta * sgn * d.abs().powf(beta - 1.0)
                }
            }
            Fiber::Custom { dx, .. } => dx(x, y),
        }
    }
}

/// Parameters of the geometric Lorenz model: `α = -λ₃/λ₁`, `β = -λ₂/λ₁`
/// and the fiber scale `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for LorenzModelParams {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            beta: 2.0,
            kappa: 0.25,
        }
    }
}

impl LorenzModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(Error::InvalidParams(format!(
                "alpha = {} must lie in (1/2, 1) so that inf|T'| = 2α > 1",
                self.alpha
            )));
        }
        if !(self.beta >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "beta = {} must be >= 1 for a bounded dG/dx",
                self.beta
            )));
        }
        if !(self.kappa > 0.0 && self.kappa <= 0.25) {
            return Err(Error::InvalidParams(format!(
                "kappa = {} must lie in (0, 1/4]",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// `F(x, y) = (T(x), G(x, y))` with `|G(x, y₁) - G(x, y₂)| ≤ λ|y₁ - y₂|`.
#[derive(Debug, Clone)]
pub struct SkewProductMap {
    base: PiecewiseExpandingMap,
    fiber: Fiber,
    lambda: f64,
}

impl SkewProductMap {
    /// Builds the map and checks fiber invariance of `[0,1]` and the
    /// contraction bound on a sample grid.
    pub fn new(base: PiecewiseExpandingMap, fiber: Fiber, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParams(format!(
                "fiber contraction {lambda} outside (0, 1)"
            )));
        }
        let map = Self {
            base,
            fiber,
            lambda,
        };
        for i in 0..CHECK_GRID {
            let x = (i as f64 + 0.5) / CHECK_GRID as f64;
            if map.base.is_at_cut(x) {
                continue;
            }
            let mut prev: Option<(f64, f64)> = None;
            for j in 0..=CHECK_GRID {
                let y = j as f64 / CHECK_GRID as f64;
                let g = map.fiber_value(x, y)?;
                if !(-1e-12..=1.0 + 1e-12).contains(&g) {
                    return Err(Error::InvalidParams(format!(
                        "G({x}, {y}) = {g} leaves [0, 1]"
                    )));
                }
                if let Some((py, pg)) = prev {
                    if (g - pg).abs() > lambda * (y - py) + 1e-12 {
                        return Err(Error::InvalidParams(format!(
                            "G is not {lambda}-Lipschitz in y at x = {x}"
                        )));
                    }
                }
                prev = Some((y, g));
            }
        }
        Ok(map)
    }

    /// The canonical geometric-Lorenz model with cut `1/2`; `λ = κ`.
    pub fn lorenz(params: LorenzModelParams) -> Result<Self> {
        params.validate()?;
        let base = PiecewiseExpandingMap::lorenz(params.alpha)?;
        Self::new(
            base,
            Fiber::Lorenz {
                kappa: params.kappa,
                beta: params.beta,
            },
            params.kappa,
        )
    }

    /// Baker-like map over `2x mod 1` with affine fibers `y ↦ c·y + i(1 - c)`.
    pub fn affine_doubling(contraction: f64) -> Result<Self> {
        if !(contraction > 0.0 && contraction <= 0.5) {
            return Err(Error::InvalidParams(format!(
                "affine fiber contraction {contraction} must lie in (0, 1/2]"
            )));
        }
        Self::new(
            PiecewiseExpandingMap::doubling(),
            Fiber::Affine { contraction },
            contraction,
        )
    }

    pub fn base(&self) -> &PiecewiseExpandingMap {
        &self.base
    }

    pub fn fiber(&self) -> &Fiber {
        &self.fiber
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn fiber_value(&self, x: f64, y: f64) -> Result<f64> {
        let i = self.base.branch_index(x)?;
        Ok(self.fiber.eval(i, self.base.branch_count(), x, y))
    }

    /// `∂G/∂y`.
    pub fn fiber_dy(&self, x: f64, y: f64) -> Result<f64> {
        self.base.branch_index(x)?;
        Ok(self.fiber.dy(x, y))
    }

    /// `∂G/∂x`.
    pub fn fiber_dx(&self, x: f64, y: f64) -> Result<f64> {
        self.base.branch_index(x)?;
        Ok(self.fiber.dx(x, y))
    }

    pub fn eval(&self, p: Point) -> Result<Point> {
        let i = self.base.branch_index(p[0])?;
        let x = self.base.branches()[i].eval(p[0]).clamp(0.0, 1.0);
        let y = self
            .fiber
            .eval(i, self.base.branch_count(), p[0], p[1])
            .clamp(0.0, 1.0);
        Ok([x, y])
    }

    /// Closed-form upper bound on `var^□(G)` for the built-in families, if
    /// one is known.
    pub fn fiber_var_square_bound(&self) -> Option<f64> {
        match &self.fiber {
            // constant in x on each branch; one jump of (1-c)/(m-1) per cut
            Fiber::Affine { contraction } => {
                let m = self.base.branch_count();
                Some(if m > 1 { 1.0 - contraction } else { 0.0 })
            }
            // per branch κ/2 · var(|2x-1|^β) = κ/2; crossing pair ≤ 1/2 + κ
            Fiber::Lorenz { kappa, .. } => Some(0.5 + 2.0 * kappa),
            Fiber::Custom { .. } => None,
        }
    }
}

/// Diameter (in the sup metric, which here is the y-extent) of
/// `F^n({x0} × [0,1])`, tracked on a 1000-point leaf grid.
pub fn leaf_diameter_decay(map: &SkewProductMap, x0: f64, n: usize) -> Result<f64> {
    let mut x = x0;
    let mut ys: Vec<f64> = (0..=LEAF_GRID)
        .map(|j| j as f64 / LEAF_GRID as f64)
        .collect();
    for step in 0..n {
        if map.base.is_at_cut(x) {
            return Err(Error::OrbitHitsCut { x0, step });
        }
        for y in ys.iter_mut() {
            *y = map.fiber_value(x, *y)?;
        }
        x = map.base.eval(x)?;
    }
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
    Ok(hi - lo)
}
