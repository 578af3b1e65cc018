//! Test functions on `I = [0,1]` and `Q = [0,1]²`.

use std::fmt;
use std::sync::Arc;

use crate::maps::{Dynamics, Point};

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A real function on `[0,1]`.
///
/// The optional tag lists breakpoints `0 = b_0 < ... < b_k = 1` such that the
/// function is continuous and monotone on every open segment `(b_i, b_{i+1})`;
/// with it, the universal p-variation can be computed exactly.
#[derive(Clone)]
pub struct Observable1D {
    f: Fn1,
    breakpoints: Option<Vec<f64>>,
}

impl fmt::Debug for Observable1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable1D")
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl Observable1D {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            breakpoints: None,
        }
    }

    /// Attaches a monotonicity tag. `0` and `1` are added if missing.
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|b| (0.0..=1.0).contains(b));
        points.push(0.0);
        points.push(1.0);
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = Some(points);
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_breakpoints(vec![])
    }

    /// `h(x) = x`.
    pub fn identity() -> Self {
        Self::new(|x| x).with_breakpoints(vec![])
    }

    /// Indicator of `[a, 1]`.
    pub fn step_at(a: f64) -> Self {
        Self::new(move |x| if x >= a { 1.0 } else { 0.0 }).with_breakpoints(vec![a])
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn breakpoints(&self) -> Option<&[f64]> {
        self.breakpoints.as_deref()
    }

    pub fn is_tagged(&self) -> bool {
        self.breakpoints.is_some()
    }
}

/// A bounded real function on `Q`, optionally with declared regularity.
#[derive(Clone)]
pub struct Observable2D {
    f: Fn2,
    lipschitz: Option<f64>,
    vertical: Option<VerticalLip>,
}

/// Declared `‖f‖_∞` and vertical Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalLip {
    pub sup: f64,
    pub lip_y: f64,
}

impl fmt::Debug for Observable2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable2D")
            .field("lipschitz", &self.lipschitz)
            .field("vertical", &self.vertical)
            .finish_non_exhaustive()
    }
}

impl Observable2D {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            lipschitz: None,
            vertical: None,
        }
    }

    /// Declares a global Lipschitz constant (sup metric on `Q`).
    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_vertical_lip(mut self, sup: f64, lip_y: f64) -> Self {
        self.vertical = Some(VerticalLip { sup, lip_y });
        self
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    pub fn at(&self, p: Point) -> f64 {
        (self.f)(p[0], p[1])
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn vertical_lip(&self) -> Option<VerticalLip> {
        self.vertical
    }

    /// `f ∘ F^n`. Points whose orbit hits a cut evaluate to NaN, which the
    /// estimators treat as the exceptional set.
    pub fn compose<D>(&self, map: Arc<D>, n: usize) -> Observable2D
    where
        D: Dynamics + 'static,
    {
        let f = self.f.clone();
        Observable2D::new(move |x, y| {
            let mut p = [x, y];
            for _ in 0..n {
                match map.step(p) {
                    Ok(q) => p = q,
                    Err(_) => return f64::NAN,
                }
            }
            f(p[0], p[1])
        })
    }

    /// A tent-shaped bump `max(0, 1 - d_sup((x,y), center)/radius)`, which is
    /// `1/radius`-Lipschitz with `‖·‖_∞ = 1`.
    pub fn bump(center: Point, radius: f64) -> Self {
        Self::new(move |x, y| {
            let d = (x - center[0]).abs().max((y - center[1]).abs());
            (1.0 - d / radius).max(0.0)
        })
        .with_lipschitz(1.0 / radius)
        .with_vertical_lip(1.0, 1.0 / radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::SkewProductMap;

    #[test]
    fn tags_are_normalized() {
        let h = Observable1D::step_at(0.5);
        assert_eq!(h.breakpoints().unwrap(), &[0.0, 0.5, 1.0]);
        assert_eq!(h.eval(0.5), 1.0);
        assert_eq!(h.eval(0.49), 0.0);
    }

    #[test]
    fn composition_follows_the_map() {
        let f = Arc::new(SkewProductMap::affine_doubling(1.0 / 3.0).unwrap());
        let g = Observable2D::new(|x, y| x + 10.0 * y).compose(f, 1);
        assert!((g.eval(0.3, 0.0) - 0.6).abs() < 1e-15);
        assert!(g.eval(0.5, 0.0).is_nan());
    }
}
