//! Orbit-based estimators: correlation decay, hitting times and logarithm
//! laws, local dimension and its Lyapunov-ratio formula, Birkhoff
//! integrability diagnostics, and regularity growth checks along iterates.

mod correlation;
mod dimension;
mod hitting;
mod orbit;
mod regularity;

pub use correlation::{correlation_series, correlation_series_with, DecaySeries};
pub use dimension::{
    dimension_formula, integrability_report, local_dimension, local_dimension_streamed,
    local_dimension_with, BirkhoffStat, DimensionReport, FormulaReport, IntegrabilityReport,
    StreamedConfig, MIN_BALL_VISITS, MIN_LARGEST_BALL,
};
pub use hitting::{
    first_hits, geometric_radii, hitting_time, loglaw_exponent, loglaw_exponent_with, LoglawConfig,
    LoglawReport, MAX_MISSING_FRACTION,
};
pub use orbit::{
    advance as advance_point, burn_in_start, sample_orbit, Orbit, OrbitConfig, Start,
    DEFAULT_JITTER, MAX_CUT_FRACTION,
};
pub use regularity::{lip_y_contraction, var_square_growth, LipYCheck, VarSquareGrowth};
