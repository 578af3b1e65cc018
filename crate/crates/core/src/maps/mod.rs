//! Interval maps, skew products and the geometric-Lorenz model family.

mod interval;
mod skew;

pub use interval::{Branch, BranchKind, PiecewiseExpandingMap, Preimage, CUT_TOLERANCE};
pub use skew::{leaf_diameter_decay, Fiber, LorenzModelParams, SkewProductMap};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A point of `Q = [0,1]²`. One-dimensional systems keep `y` fixed.
pub type Point = [f64; 2];

/// Sup-metric distance on `Q`.
pub fn sup_distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
}

/// Common surface of the systems that orbit-based statistics run on.
pub trait Dynamics: Send + Sync {
    fn step(&self, p: Point) -> Result<Point>;

    fn base(&self) -> &PiecewiseExpandingMap;

    /// 1 for interval maps, 2 for skew products.
    fn dim(&self) -> usize;

    /// Distance used for balls: `|x - x'|` in 1D, the sup metric in 2D.
    fn distance(&self, a: Point, b: Point) -> f64 {
        if self.dim() == 1 {
            (a[0] - b[0]).abs()
        } else {
            sup_distance(a, b)
        }
    }
}

impl Dynamics for PiecewiseExpandingMap {
    fn step(&self, p: Point) -> Result<Point> {
        Ok([self.eval(p[0])?, p[1]])
    }

    fn base(&self) -> &PiecewiseExpandingMap {
        self
    }

    fn dim(&self) -> usize {
        1
    }
}

impl Dynamics for SkewProductMap {
    fn step(&self, p: Point) -> Result<Point> {
        self.eval(p)
    }

    fn base(&self) -> &PiecewiseExpandingMap {
        SkewProductMap::base(self)
    }

    fn dim(&self) -> usize {
        2
    }
}

/// Either kind of system, as selected by a map family.
#[derive(Debug, Clone)]
pub enum System {
    Interval(PiecewiseExpandingMap),
    Skew(SkewProductMap),
}

impl System {
    pub fn as_skew(&self) -> Option<&SkewProductMap> {
        match self {
            System::Skew(s) => Some(s),
            System::Interval(_) => None,
        }
    }
}

impl Dynamics for System {
    fn step(&self, p: Point) -> Result<Point> {
        match self {
            System::Interval(t) => t.step(p),
            System::Skew(f) => f.step(p),
        }
    }

    fn base(&self) -> &PiecewiseExpandingMap {
        match self {
            System::Interval(t) => t,
            System::Skew(f) => f.base(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            System::Interval(_) => 1,
            System::Skew(_) => 2,
        }
    }
}

/// Named map families, as they appear in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MapFamily {
    Doubling,
    Tent,
    /// The one-dimensional Lorenz base map alone.
    LorenzBase {
        alpha: f64,
    },
    Lorenz(LorenzModelParams),
    AffineSkew {
        contraction: f64,
    },
}

impl MapFamily {
    pub fn build(&self) -> Result<System> {
        Ok(match self {
            MapFamily::Doubling => System::Interval(PiecewiseExpandingMap::doubling()),
            MapFamily::Tent => System::Interval(PiecewiseExpandingMap::tent()),
            MapFamily::LorenzBase { alpha } => {
                System::Interval(PiecewiseExpandingMap::lorenz(*alpha)?)
            }
            MapFamily::Lorenz(p) => System::Skew(SkewProductMap::lorenz(*p)?),
            MapFamily::AffineSkew { contraction } => {
                System::Skew(SkewProductMap::affine_doubling(*contraction)?)
            }
        })
    }
}
