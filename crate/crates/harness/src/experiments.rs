//! The seven configurable experiments. Each returns its CSV tables, a JSON
//! summary, warnings for the manifest, and any invariant violations.

use serde_json::json;
use singhyp_core::flow::{flow_loglaw, make_lorenz_roof, SingularityParams, SuspensionFlow};
use singhyp_core::io::csv_table;
use singhyp_core::maps::{Dynamics, MapFamily, Point, System};
use singhyp_core::measures::project_pi;
use singhyp_core::norms::{dyadic_epsilons, var_square_with, Exponent, SampledFunction};
use singhyp_core::observable::{Observable1D, Observable2D};
use singhyp_core::par::Exec;
use singhyp_core::stats::{
    correlation_series_with, dimension_formula, geometric_radii, lip_y_contraction,
    local_dimension_streamed, local_dimension_with, loglaw_exponent_with, sample_orbit,
    var_square_growth, LoglawConfig, Orbit, OrbitConfig, Start, StreamedConfig,
};
use singhyp_core::transfer::{
    convergence_rate, invariant_density_with, ulam_matrix_with, DensityGrid, PowerIteration,
};
use singhyp_core::Error;

use crate::config::{
    DimensionMode, Experiment, InitialDensity, LoadedConfig, ObservableKind, RoofKind, TestFunction,
};

/// Seed offset for the per-sample hitting-time streams, so that they never
/// share a seed with the orbit that picked the target.
pub const SAMPLE_SEED_OFFSET: u64 = 2;

/// Orbit length for the dimension formula when no stored orbit is at hand.
pub const FORMULA_ORBIT: usize = 1_000_000;

#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// `(file name, contents)`.
    pub tables: Vec<(String, String)>,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl RunError {
    /// 1 when the request itself was unusable, 2 when a computation broke one
    /// of its invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 1,
            RunError::Core(e) => match e {
                Error::InvalidParams(_)
                | Error::InvalidTarget(_)
                | Error::InvalidEpsilon { .. }
                | Error::InsufficientOrbit { .. }
                | Error::OnStableManifold => 1,
                _ => 2,
            },
        }
    }
}

pub struct Context {
    pub seed: u64,
    pub exec: Exec,
}

pub fn run(exp: Experiment, cfg: &LoadedConfig, ctx: &Context) -> Result<Artifacts, RunError> {
    let system = cfg.family.build()?;
    match exp {
        Experiment::Ulam => ulam(cfg, &system, ctx),
        Experiment::Convergence => convergence(cfg, &system),
        Experiment::Correlations => correlations(cfg, &system, ctx),
        Experiment::LoglawMap => loglaw(cfg, &system, ctx),
        Experiment::Dimension => dimension(cfg, &system, ctx),
        Experiment::FlowLoglaw => flow(cfg, system, ctx),
        Experiment::NormsAudit => norms_audit(cfg, &system, ctx),
    }
}

pub fn orbit(system: &System, length: usize, burn_in: usize, seed: u64) -> Result<Orbit, Error> {
    sample_orbit(
        system,
        Start::Random,
        OrbitConfig {
            burn_in,
            length,
            seed,
            ..Default::default()
        },
    )
}

/// `count` points spread evenly along the orbit, away from its ends.
pub fn spread_targets(orbit: &Orbit, count: usize) -> Vec<Point> {
    let n = orbit.len();
    (1..=count)
        .map(|i| orbit.points[i * n / (count + 1)])
        .collect()
}

fn nudge_warning(orbit: &Orbit, out: &mut Vec<String>) {
    if orbit.nudged > 0 {
        out.push(format!(
            "{} of {} orbit points were nudged off cut points",
            orbit.nudged,
            orbit.len()
        ));
    }
}

fn formula(system: &System, orbit: Option<&Orbit>, seed: u64) -> Result<Option<f64>, Error> {
    let Some(skew) = system.as_skew() else {
        return Ok(None);
    };
    let own;
    let orbit = match orbit {
        Some(o) => o,
        None => {
            own = self::orbit(system, FORMULA_ORBIT, 10_000, seed)?;
            &own
        }
    };
    Ok(Some(dimension_formula(skew, orbit)?.value))
}

fn ulam(cfg: &LoadedConfig, system: &System, ctx: &Context) -> Result<Artifacts, RunError> {
    let u = &cfg.config.ulam;
    let op = ulam_matrix_with(system.base(), u.bins, ctx.exec);
    let spec = invariant_density_with(
        &op,
        PowerIteration {
            tol: u.tol,
            max_iter: u.max_iter,
            exec: ctx.exec,
            ..Default::default()
        },
    )?;
    let h = &spec.invariant_density;
    let mut violations = Vec::new();
    if (h.mass() - 1.0).abs() > 1e-9 {
        violations.push(format!("invariant density has mass {}", h.mass()));
    }
    if h.values().iter().any(|&v| v < 0.0) {
        violations.push("invariant density has negative entries".into());
    }
    Ok(Artifacts {
        tables: vec![("ulam.csv".into(), h.to_csv())],
        summary: json!({
            "bins": u.bins,
            "nnz": op.nnz(),
            "leading_eigenvalue": spec.leading_eigenvalue,
            "second_modulus": spec.second_modulus,
            "residual": spec.residual,
            "iterations": spec.iterations,
            "no_spectral_gap": spec.no_spectral_gap,
            "mass": h.mass(),
        }),
        warnings: spec.warnings.clone(),
        violations,
    })
}

fn convergence(cfg: &LoadedConfig, system: &System) -> Result<Artifacts, RunError> {
    let c = &cfg.config.convergence;
    let f0 = match c.initial {
        InitialDensity::Linear => DensityGrid::from_fn(c.bins, |x| 1.0 + (x - 0.5)),
        InitialDensity::Step => DensityGrid::from_fn(c.bins, |x| if x < 0.5 { 2.0 } else { 0.0 }),
    };
    let g = match c.observable {
        TestFunction::Identity => Observable1D::identity(),
        TestFunction::Cos => Observable1D::new(|x| (2.0 * std::f64::consts::PI * x).cos()),
    };
    let series = convergence_rate(system.base(), &f0, &g, c.horizon)?;
    let mut warnings = Vec::new();
    if series.rate.is_none() {
        warnings.push("too few terms above the rounding floor for a rate fit".into());
    }
    Ok(Artifacts {
        tables: vec![(
            "convergence.csv".into(),
            csv_table(
                &["n", "term"],
                series
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(n, &t)| vec![n as f64, t]),
            ),
        )],
        summary: json!({
            "rate": series.rate,
            "r2": series.fit.map(|f| f.r_squared),
            "window": [series.window.0, series.window.1],
        }),
        warnings,
        violations: Vec::new(),
    })
}

pub fn base_coordinate() -> Observable2D {
    Observable2D::new(|x, _| x).with_lipschitz(1.0)
}

fn correlations(cfg: &LoadedConfig, system: &System, ctx: &Context) -> Result<Artifacts, RunError> {
    let c = &cfg.config.correlations;
    let orbit = orbit(system, c.length, c.burn_in, ctx.seed)?;
    let f = match c.observable {
        ObservableKind::Bump => Observable2D::bump(c.center, c.radius),
        ObservableKind::X => base_coordinate(),
    };
    let series = correlation_series_with(&f, &f, &orbit, c.max_lag, ctx.exec)?;
    let mut warnings = Vec::new();
    nudge_warning(&orbit, &mut warnings);
    if series.window.len() < 2 {
        warnings.push("fewer than two lags above the noise floor".into());
    }
    Ok(Artifacts {
        tables: vec![("correlations.csv".into(), series.to_csv())],
        summary: series.summary_json(),
        warnings,
        violations: Vec::new(),
    })
}

fn pick_target(
    system: &System,
    explicit: Option<[f64; 2]>,
    index: usize,
    seed: u64,
) -> Result<Point, Error> {
    match explicit {
        Some(p) => Ok(p),
        None => Ok(orbit(system, index + 1, 10_000, seed)?.points[index]),
    }
}

fn loglaw(cfg: &LoadedConfig, system: &System, ctx: &Context) -> Result<Artifacts, RunError> {
    let l = &cfg.config.loglaw;
    let target = pick_target(system, l.target, l.target_index, ctx.seed)?;
    let radii = geometric_radii(l.r_max, l.ratio, l.count);
    let report = loglaw_exponent_with(
        system,
        target,
        &radii,
        LoglawConfig {
            samples: l.samples,
            horizon: l.horizon,
            burn_in: l.burn_in,
            seed: ctx.seed.wrapping_add(SAMPLE_SEED_OFFSET),
            exec: ctx.exec,
            ..Default::default()
        },
    )?;
    let d = formula(system, None, ctx.seed)?;
    let mut summary = report.summary_json();
    summary["target"] = json!(target);
    summary["d_formula"] = json!(d);
    summary["missing_fraction"] = json!(report.missing_fraction);
    Ok(Artifacts {
        tables: vec![("loglaw-map.csv".into(), report.to_csv())],
        summary,
        warnings: report.warnings.clone(),
        violations: Vec::new(),
    })
}

fn dimension(cfg: &LoadedConfig, system: &System, ctx: &Context) -> Result<Artifacts, RunError> {
    let d = &cfg.config.dimension;
    let radii = geometric_radii(d.r_max, d.ratio, d.count);
    let orbit = orbit(system, d.length, d.burn_in, ctx.seed)?;
    let targets = spread_targets(&orbit, d.points);
    let reports = match d.mode {
        DimensionMode::Stored => ctx.exec.map_slice(&targets, |&t| {
            local_dimension_with(&orbit.points, t, &radii, system.dim(), Exec::Sequential)
        }),
        DimensionMode::Streamed => local_dimension_streamed(
            system,
            &targets,
            &radii,
            StreamedConfig {
                steps: d.steps,
                chains: d.chains,
                burn_in: d.burn_in,
                seed: ctx.seed,
                exec: ctx.exec,
                ..Default::default()
            },
        )?,
    };
    let formula = match system.as_skew() {
        Some(skew) => Some(dimension_formula(skew, &orbit)?),
        None => None,
    };
    let mut warnings = Vec::new();
    nudge_warning(&orbit, &mut warnings);
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for (i, (t, rep)) in targets.iter().zip(&reports).enumerate() {
        match rep {
            Ok(r) => {
                slopes.push(r.slope);
                if !r.excluded.is_empty() {
                    warnings.push(format!(
                        "target {i}: {} radii excluded for too few visits",
                        r.excluded.len()
                    ));
                }
                for (&radius, &m) in r.radii.iter().zip(&r.ball_masses) {
                    rows.push(vec![i as f64, t[0], t[1], radius, m]);
                }
            }
            Err(e) => warnings.push(format!("target {i} at {t:?}: {e}")),
        }
    }
    if slopes.is_empty() {
        return Err(Error::SparseBall { excluded: radii }.into());
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    Ok(Artifacts {
        tables: vec![(
            "dimension.csv".into(),
            csv_table(&["target", "x", "y", "r", "mass"], rows),
        )],
        summary: json!({
            "slope": mean,
            "slopes": slopes,
            "targets": targets,
            "formula": formula.map(|f| f.value),
            "formula_drift": formula.map(|f| f.drift),
        }),
        warnings,
        violations: Vec::new(),
    })
}

fn flow(cfg: &LoadedConfig, system: System, ctx: &Context) -> Result<Artifacts, RunError> {
    let f = &cfg.config.flow;
    let base = pick_target(&system, f.target, f.target_index, ctx.seed)?;
    let params = SingularityParams::new(f.lambda[0], f.lambda[1], f.lambda[2])?;
    let (flow, singular) = match f.roof {
        RoofKind::Constant => (SuspensionFlow::constant(system, f.height)?, None),
        RoofKind::Singular => {
            if !matches!(
                cfg.family,
                MapFamily::Lorenz(_) | MapFamily::LorenzBase { .. }
            ) {
                return Err(RunError::Usage(
                    "a singular roof needs a lorenz or lorenz-base map".into(),
                ));
            }
            (make_lorenz_roof(&params, system, f.tau0)?, Some(&params))
        }
    };
    let radii = geometric_radii(f.r_max, f.ratio, f.count);
    let target = singhyp_core::flow::FlowPoint::new(base, f.target_height);
    let report = flow_loglaw(
        &flow,
        &target,
        &radii,
        LoglawConfig {
            samples: f.samples,
            horizon: f.horizon,
            burn_in: f.burn_in,
            seed: ctx.seed.wrapping_add(SAMPLE_SEED_OFFSET),
            exec: ctx.exec,
            ..Default::default()
        },
        singular,
    )?;
    let mut warnings = report.section.warnings.clone();
    if !report.dropped_radii.is_empty() {
        warnings.push(format!(
            "flow radii dropped for missing hits: {:?}",
            report.dropped_radii
        ));
    }
    for (r, m) in report.radii.iter().zip(&report.missing_fraction) {
        if *m > 0.0 {
            warnings.push(format!("r = {r}: {:.1}% of flow samples missed", 100.0 * m));
        }
    }
    let mut summary = report.summary_json();
    summary["target"] = json!([base[0], base[1], f.target_height]);
    Ok(Artifacts {
        tables: vec![("flow-loglaw.csv".into(), report.to_csv())],
        summary,
        warnings,
        violations: Vec::new(),
    })
}

/// `var_{1,1}(π f)` and `var^□(f)` on the same dyadic grid.
pub fn projection_check(f: &Observable2D, grid: usize) -> (f64, f64) {
    let pi = project_pi(f, grid);
    let s = SampledFunction::new(&pi, grid);
    let lhs = s.var_p_r(
        Exponent::Finite(1.0),
        1.0,
        &dyadic_epsilons(grid.trailing_zeros() as usize),
    );
    let rhs = var_square_with(f, grid, Exec::default()).value;
    (lhs, rhs)
}

fn norms_audit(cfg: &LoadedConfig, system: &System, ctx: &Context) -> Result<Artifacts, RunError> {
    let n = &cfg.config.norms;
    let skew = system
        .as_skew()
        .ok_or_else(|| RunError::Usage("norms-audit needs a skew-product map".into()))?;
    let f = Observable2D::bump(n.center, n.radius);
    let growth = var_square_growth(skew, &f, n.n_max, n.grid, ctx.exec)?;
    let lip = lip_y_contraction(skew, &f, n.n_max, n.grid, 1e-9, ctx.exec);
    let (pi_lhs, pi_rhs) = projection_check(&f, n.grid.next_power_of_two());
    let mut violations = Vec::new();
    for g in &growth {
        if !g.holds {
            violations.push(format!(
                "var^□ growth bound fails at n = {}: {} > {}",
                g.n, g.lhs, g.rhs
            ));
        }
    }
    for l in &lip {
        if !l.holds {
            violations.push(format!(
                "vertical Lipschitz contraction fails at n = {}: {} > {}",
                l.n, l.estimate, l.bound
            ));
        }
    }
    if pi_lhs > 2.0 * pi_rhs * (1.0 + 1e-12) {
        violations.push(format!("projection bound fails: {pi_lhs} > 2·{pi_rhs}"));
    }
    let rows = growth
        .iter()
        .zip(&lip)
        .map(|(g, l)| vec![g.n as f64, g.lhs, g.rhs, l.estimate, l.bound]);
    Ok(Artifacts {
        tables: vec![(
            "norms-audit.csv".into(),
            csv_table(
                &[
                    "n",
                    "var_square_lhs",
                    "var_square_rhs",
                    "lip_y",
                    "lip_y_bound",
                ],
                rows,
            ),
        )],
        summary: json!({
            "var_square_growth": growth,
            "lip_y": lip,
            "projection": {"var_1_1": pi_lhs, "var_square": pi_rhs},
        }),
        warnings: Vec::new(),
        violations,
    })
}
