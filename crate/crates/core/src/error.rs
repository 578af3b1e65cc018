use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("map is undefined at cut point x = {x}")]
    UndefinedAtCut { x: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("orbit of x0 = {x0} hits a cut point at step {step}")]
    OrbitHitsCut { x0: f64, step: usize },

    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("epsilon {eps} outside (0, {max}]")]
    InvalidEpsilon { eps: f64, max: f64 },

    #[error(
        "power iteration did not converge: residual {residual:e} after {iterations} iterations"
    )]
    NoConvergence { residual: f64, iterations: usize },

    #[error("decay series is degenerate (all terms below {floor:e})")]
    DegenerateSeries { floor: f64 },

    #[error("orbit of length {len} is too short for max lag {max_lag}")]
    InsufficientOrbit { len: usize, max_lag: usize },

    #[error("target not hit within horizon {horizon}")]
    NotHit { horizon: f64 },

    #[error("every radius was dropped for missing hits")]
    AllMissing,

    #[error("{nudged} of {total} iterates were nudged off cut points")]
    TooManyCutHits { nudged: usize, total: usize },

    #[error("fiber derivative vanishes along the orbit (|dG/dy| = {value:e} at step {step})")]
    DegenerateFiber { value: f64, step: usize },

    #[error("too few visits for a dimension fit; excluded radii: {excluded:?}")]
    SparseBall { excluded: Vec<f64> },

    #[error("point with x1 = 0 lies on the local stable manifold")]
    OnStableManifold,

    #[error("invalid target: {0}")]
    InvalidTarget(String),
}
