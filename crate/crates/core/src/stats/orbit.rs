use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{Dynamics, Point};
use crate::measures::CUT_NUDGE;
use crate::rng::{self, Stream};

/// Default per-step perturbation of the base coordinate.
///
/// Binary floating point turns maps like `2x mod 1` into shifts that empty
/// the mantissa within ~53 steps, so every long orbit would end on a fixed
/// point. A uniform kick of this size refreshes the low bits each step.
pub const DEFAULT_JITTER: f64 = 1.0 / (1u64 << 48) as f64;

/// Orbits with more nudged iterates than this fraction are rejected.
pub const MAX_CUT_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Start {
    Point(Point),
    /// Uniform in the square, drawn from the seed.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitConfig {
    pub burn_in: usize,
    pub length: usize,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            length: 100_000,
            jitter: DEFAULT_JITTER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub start: Point,
    pub burn_in: usize,
    pub seed: u64,
    pub points: Vec<Point>,
    /// Iterates moved off a cut.
    pub nudged: usize,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when the second half of the orbit is a single repeated point.
    pub fn is_degenerate(&self) -> bool {
        let tail = &self.points[self.points.len() / 2..];
        tail.len() > 1 && tail.iter().all(|p| p == &tail[0])
    }
}

/// One step with cut nudging and base jitter; nudges are counted.
pub fn advance<D: Dynamics + ?Sized>(
    map: &D,
    p: Point,
    jitter: f64,
    rng: &mut Stream,
    nudged: &mut usize,
) -> Point {
    let mut q = match map.step(p) {
        Ok(q) => q,
        Err(_) => {
            *nudged += 1;
            let x = map.base().nudge(p[0], CUT_NUDGE);
            map.step([x, p[1]])
                .or_else(|_| map.step([(p[0] - CUT_NUDGE).max(0.0), p[1]]))
                .unwrap_or([x, p[1]])
        }
    };
    if jitter > 0.0 {
        q[0] = (q[0] + jitter * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
    }
    q
}

pub(crate) fn random_point_impl(rng: &mut Stream) -> Point {
    [rng.random(), rng.random()]
}

/// A uniform start pushed through `burn_in` jittered steps.
pub fn burn_in_start<D: Dynamics + ?Sized>(
    map: &D,
    burn_in: usize,
    jitter: f64,
    rng: &mut Stream,
) -> Point {
    let mut nudged = 0;
    let mut p = random_point_impl(rng);
    for _ in 0..burn_in {
        p = advance(map, p, jitter, rng, &mut nudged);
    }
    p
}

/// Iterates `map` from `start`, discards `burn_in` steps and stores
/// `length` points (the first stored point is the start when there is no
/// burn-in).
pub fn sample_orbit<D: Dynamics + ?Sized>(
    map: &D,
    start: Start,
    cfg: OrbitConfig,
) -> Result<Orbit> {
    if cfg.length == 0 {
        return Err(Error::InvalidParams(
            "orbit length must be at least 1".into(),
        ));
    }
    let mut rng = rng::stream(cfg.seed, 0);
    let p0 = match start {
        Start::Point(p) => p,
        Start::Random => random_point_impl(&mut rng),
    };
    let mut nudged = 0;
    let mut p = p0;
    for _ in 0..cfg.burn_in {
        p = advance(map, p, cfg.jitter, &mut rng, &mut nudged);
    }
    let mut points = Vec::with_capacity(cfg.length);
    points.push(p);
    for _ in 1..cfg.length {
        p = advance(map, p, cfg.jitter, &mut rng, &mut nudged);
        points.push(p);
    }
    let total = cfg.burn_in + cfg.length;
    if nudged as f64 > MAX_CUT_FRACTION * total as f64 {
        return Err(Error::TooManyCutHits { nudged, total });
    }
    Ok(Orbit {
        start: p0,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        points,
        nudged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{LorenzModelParams, PiecewiseExpandingMap, SkewProductMap};
    use crate::measures::Measure1D;
    use crate::transfer::{invariant_density, ulam_matrix};

    #[test]
    fn trivial_orbit_is_start() {
        let t = PiecewiseExpandingMap::doubling();
        let cfg = OrbitConfig {
            burn_in: 0,
            length: 1,
            ..Default::default()
        };
        let o = sample_orbit(&t, Start::Point([0.3, 0.2]), cfg).unwrap();
        assert_eq!(o.points, vec![[0.3, 0.2]]);
    }

    #[test]
    fn dyadic_start_collapses_without_jitter() {
        let t = PiecewiseExpandingMap::doubling();
        let cfg = OrbitConfig {
            burn_in: 0,
            length: 500,
            jitter: 0.0,
            seed: 0,
        };
        for x in [0.5, 0.1234] {
            match sample_orbit(&t, Start::Point([x, 0.0]), cfg) {
                Ok(o) => assert!(o.is_degenerate()),
                Err(e) => assert!(matches!(e, Error::TooManyCutHits { .. })),
            }
        }
        let jittered = sample_orbit(
            &t,
            Start::Point([0.1234, 0.0]),
            OrbitConfig {
                jitter: DEFAULT_JITTER,
                ..cfg
            },
        )
        .unwrap();
        assert!(!jittered.is_degenerate());
    }

    #[test]
    fn seeded_orbits_are_reproducible() {
        let f = SkewProductMap::affine_doubling(1.0 / 3.0).unwrap();
        let cfg = OrbitConfig {
            length: 1000,
            seed: 9,
            ..Default::default()
        };
        let a = sample_orbit(&f, Start::Random, cfg).unwrap();
        let b = sample_orbit(&f, Start::Random, cfg).unwrap();
        assert_eq!(a, b);
        let c = sample_orbit(&f, Start::Random, OrbitConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn lorenz_marginal_matches_ulam_density() {
        let f = SkewProductMap::lorenz(LorenzModelParams::default()).unwrap();
        let cfg = OrbitConfig {
            length: 1_000_000,
            seed: 42,
            ..Default::default()
        };
        let o = sample_orbit(&f, Start::Random, cfg).unwrap();
        let xs = Measure1D::empirical(o.points.iter().map(|p| p[0]).collect()).unwrap();
        let h = invariant_density(&ulam_matrix(f.base(), 1024), 1e-13, 10_000).unwrap();
        let err = xs
            .binned(1024)
            .unwrap()
            .l1_distance(&h.invariant_density)
            .unwrap();
        assert!(err < 0.05, "{err}");
    }
}
