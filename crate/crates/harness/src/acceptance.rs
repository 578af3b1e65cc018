//! Acceptance suites. Each suite runs a fixed battery of checks at the
//! stated scale and tolerances, collects its CSV tables, and reports one
//! verdict. Failures are verdicts, never errors.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use singhyp_core::flow::{
    flow_loglaw, linear_flow, make_lorenz_roof, singular_return, singular_return_time,
    singular_time_integral, singular_time_quadrature, FlowLoglawReport, FlowPoint,
    SingularityParams, SuspensionFlow,
};
use singhyp_core::io::csv_table;
use singhyp_core::maps::{LorenzModelParams, PiecewiseExpandingMap, Point, SkewProductMap, System};
use singhyp_core::measures::{pushforward_fiber, w1_distance, Measure1D};
use singhyp_core::norms::{
    compare_variations, dyadic_epsilons, var_square_with, Exponent, SampledFunction,
    OSC_RADIUS_BOUND,
};
use singhyp_core::observable::{Observable1D, Observable2D};
use singhyp_core::par::{with_workers, Exec};
use singhyp_core::rng;
use singhyp_core::stats::{
    correlation_series_with, dimension_formula, geometric_radii, local_dimension_streamed,
    local_dimension_with, loglaw_exponent_with, var_square_growth, LoglawConfig, LoglawReport,
    StreamedConfig,
};
use singhyp_core::transfer::{
    convergence_rate, invariant_density_with, lasota_yorke_probe, pf_apply, ulam_matrix_with,
    DensityGrid, PowerIteration, ProbeConfig,
};
use singhyp_core::Result;

use crate::experiments::{
    base_coordinate, orbit, projection_check, spread_targets, SAMPLE_SEED_OFFSET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    W1,
    Transfer,
    Ly,
    Norms,
    Correlations,
    Dimension,
    Loglaw,
    Flow,
    Determinism,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::W1,
        Suite::Transfer,
        Suite::Ly,
        Suite::Norms,
        Suite::Correlations,
        Suite::Dimension,
        Suite::Loglaw,
        Suite::Flow,
        Suite::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::W1 => "w1",
            Suite::Transfer => "transfer",
            Suite::Ly => "ly",
            Suite::Norms => "norms",
            Suite::Correlations => "correlations",
            Suite::Dimension => "dimension",
            Suite::Loglaw => "loglaw",
            Suite::Flow => "flow",
            Suite::Determinism => "determinism",
        }
    }

    pub fn criterion(self) -> usize {
        Suite::ALL.iter().position(|&s| s == self).unwrap_or(0) + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            Suite::W1 => "W1 metric axioms, fiber contraction, convexity, Lipschitz test",
            Suite::Transfer => {
                "Ulam densities, exact annihilation, grid doubling, convergence rate"
            }
            Suite::Ly => "Lasota-Yorke probe",
            Suite::Norms => "norm inequalities",
            Suite::Correlations => "decay of correlations",
            Suite::Dimension => "local dimension and dimension formula",
            Suite::Loglaw => "map logarithm law",
            Suite::Flow => "suspension flow",
            Suite::Determinism => "worker-count determinism",
        }
    }

    /// Wall-clock budget in seconds.
    pub fn budget(self) -> Option<f64> {
        match self {
            Suite::W1 => Some(10.0),
            Suite::Transfer => Some(60.0),
            Suite::Ly => Some(120.0),
            Suite::Norms => Some(60.0),
            Suite::Correlations => Some(600.0),
            Suite::Dimension => Some(300.0),
            Suite::Loglaw => Some(900.0),
            Suite::Flow => Some(900.0),
            Suite::Determinism => None,
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
                format!(
                    "unknown suite `{s}` (expected all or one of {})",
                    names.join(", ")
                )
            })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `all` or a single suite name.
pub fn parse_selection(s: &str) -> std::result::Result<Vec<Suite>, String> {
    if s == "all" {
        Ok(Suite::ALL.to_vec())
    } else {
        Ok(vec![s.parse()?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: Vec<Check>,
    /// `(file name, contents)`, in a fixed order.
    pub tables: Vec<(String, String)>,
    pub seconds: f64,
}

impl SuiteOutcome {
    pub fn within_budget(&self) -> bool {
        self.suite.budget().is_none_or(|b| self.seconds < b)
    }

    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass) && self.within_budget()
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// One line for the pass/fail table.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} criterion {} [{}] {}: {}/{} checks, {:.1}s",
            if self.pass() { "PASS" } else { "FAIL" },
            self.suite.criterion(),
            self.suite,
            self.suite.title(),
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len(),
            self.seconds,
        );
        if !self.within_budget() {
            s.push_str(&format!(
                " (over the {:.0}s budget)",
                self.suite.budget().unwrap_or(0.0)
            ));
        }
        for c in self.failures().into_iter().take(5) {
            s.push_str(&format!("\n    failed {}: {}", c.name, c.detail));
        }
        s
    }
}

/// Machine-readable verdicts. Holds nothing that depends on timing or on
/// the worker count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<CriterionVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub criterion: usize,
    pub suite: Suite,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub fn verdict(seed: u64, outcomes: &[SuiteOutcome]) -> Verdict {
    let criteria: Vec<CriterionVerdict> = outcomes
        .iter()
        .map(|o| CriterionVerdict {
            criterion: o.suite.criterion(),
            suite: o.suite,
            title: o.suite.title().into(),
            pass: o.pass(),
            checks: o.checks.clone(),
        })
        .collect();
    Verdict {
        seed,
        pass: criteria.iter().all(|c| c.pass),
        criteria,
    }
}

/// Runs the selected suites with `workers` threads. Determinism reruns every
/// computational suite that ran (all of them when it runs alone) with a
/// different worker count and compares the tables byte for byte.
pub fn run_acceptance(
    selection: &[Suite],
    seed: u64,
    workers: usize,
    mut progress: impl FnMut(&SuiteOutcome),
) -> Vec<SuiteOutcome> {
    let compute: Vec<Suite> = selection
        .iter()
        .copied()
        .filter(|&s| s != Suite::Determinism)
        .collect();
    let mut outcomes = Vec::new();
    for &s in &compute {
        let o = with_workers(workers, || run_suite(s, seed, Exec::default()));
        progress(&o);
        outcomes.push(o);
    }
    if selection.contains(&Suite::Determinism) {
        let start = Instant::now();
        let first: Vec<SuiteOutcome> = if compute.is_empty() {
            Suite::ALL[..8]
                .iter()
                .map(|&s| with_workers(workers, || run_suite(s, seed, Exec::default())))
                .collect()
        } else {
            outcomes.clone()
        };
        let other = if workers == 1 { 4 } else { 1 };
        let second: Vec<SuiteOutcome> = first
            .iter()
            .map(|o| with_workers(other, || run_suite(o.suite, seed, Exec::default())))
            .collect();
        let mut checks = determinism_checks(&first, &second, workers, other);
        let sequential = run_suite(Suite::W1, seed, Exec::Sequential);
        checks.push(compare_tables(
            "w1 sequential",
            &first_or_run(&first, Suite::W1, seed, workers),
            &sequential,
        ));
        let o = SuiteOutcome {
            suite: Suite::Determinism,
            checks,
            tables: Vec::new(),
            seconds: start.elapsed().as_secs_f64(),
        };
        progress(&o);
        outcomes.push(o);
    }
    outcomes
}

fn first_or_run(first: &[SuiteOutcome], suite: Suite, seed: u64, workers: usize) -> SuiteOutcome {
    first
        .iter()
        .find(|o| o.suite == suite)
        .cloned()
        .unwrap_or_else(|| with_workers(workers, || run_suite(suite, seed, Exec::default())))
}

fn compare_tables(label: &str, a: &SuiteOutcome, b: &SuiteOutcome) -> Check {
    let names_a: Vec<&str> = a.tables.iter().map(|t| t.0.as_str()).collect();
    let names_b: Vec<&str> = b.tables.iter().map(|t| t.0.as_str()).collect();
    if names_a != names_b {
        return check(
            label,
            false,
            format!("table sets differ: {names_a:?} vs {names_b:?}"),
        );
    }
    let differing: Vec<&str> = a
        .tables
        .iter()
        .zip(&b.tables)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let verdicts_agree = a.checks == b.checks;
    check(
        label,
        differing.is_empty() && verdicts_agree,
        if differing.is_empty() {
            format!(
                "{} tables byte-identical{}",
                names_a.len(),
                if verdicts_agree {
                    ""
                } else {
                    ", but check details differ"
                }
            )
        } else {
            format!("differing tables: {differing:?}")
        },
    )
}

fn determinism_checks(
    first: &[SuiteOutcome],
    second: &[SuiteOutcome],
    wa: usize,
    wb: usize,
) -> Vec<Check> {
    first
        .iter()
        .zip(second)
        .map(|(a, b)| compare_tables(&format!("{} workers {wa} vs {wb}", a.suite), a, b))
        .collect()
}

pub fn run_suite(suite: Suite, seed: u64, exec: Exec) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = Collector::default();
    match suite {
        Suite::W1 => w1_suite(seed, &mut out),
        Suite::Transfer => transfer_suite(exec, &mut out),
        Suite::Ly => ly_suite(seed, exec, &mut out),
        Suite::Norms => norms_suite(seed, exec, &mut out),
        Suite::Correlations => correlations_suite(seed, exec, &mut out),
        Suite::Dimension => dimension_suite(seed, exec, &mut out),
        Suite::Loglaw => loglaw_suite(seed, exec, &mut out),
        Suite::Flow => flow_suite(seed, exec, &mut out),
        Suite::Determinism => {}
    }
    SuiteOutcome {
        suite,
        checks: out.checks,
        tables: out.tables,
        seconds: start.elapsed().as_secs_f64(),
    }
}

#[derive(Default)]
struct Collector {
    checks: Vec<Check>,
    tables: Vec<(String, String)>,
}

impl Collector {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn table(&mut self, name: &str, csv: String) {
        self.tables.push((name.to_owned(), csv));
    }

    /// Records an error from a step that should have produced a value.
    fn ok<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(check(name, false, format!("error: {e}")));
                None
            }
        }
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn g3(x: f64) -> String {
    format!("{x:.3e}")
}

const AFFINE_DIMENSION: f64 = 1.0 + std::f64::consts::LN_2 / 1.098_612_288_668_109_8;

fn lorenz_model() -> SkewProductMap {
    SkewProductMap::lorenz(LorenzModelParams::default())
        .expect("default Lorenz parameters are valid")
}

fn affine_skew() -> SkewProductMap {
    SkewProductMap::affine_doubling(1.0 / 3.0).expect("1/3 is a valid contraction")
}

// ---------------------------------------------------------------- W1

fn random_measure(rng: &mut impl Rng) -> Measure1D {
    let n = rng.random_range(1..=64);
    if rng.random_bool(0.5) {
        Measure1D::empirical((0..n).map(|_| rng.random::<f64>()).collect()).expect("finite samples")
    } else {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
        let total: f64 = w.iter().sum();
        Measure1D::weighted(
            w.into_iter()
                .map(|w| (rng.random::<f64>(), w / total))
                .collect(),
        )
        .expect("positive weights")
    }
}

fn w1_suite(seed: u64, out: &mut Collector) {
    let mut rng = rng::stream(seed, 0);
    let w = |a: &Measure1D, b: &Measure1D| w1_distance(a, b).unwrap_or(f64::NAN);

    let mut rows = Vec::new();
    let (mut sym, mut tri, mut zero) = (0, 0, 0);
    let mut worst_tri = f64::NEG_INFINITY;
    for case in 0..100 {
        let (a, b, c) = (
            random_measure(&mut rng),
            random_measure(&mut rng),
            random_measure(&mut rng),
        );
        let (ab, ba, bc, ac, aa) = (w(&a, &b), w(&b, &a), w(&b, &c), w(&a, &c), w(&a, &a));
        sym += usize::from(ab.to_bits() == ba.to_bits() && ab >= 0.0);
        zero += usize::from(aa == 0.0);
        let excess = ac - ab - bc;
        worst_tri = worst_tri.max(excess);
        tri += usize::from(excess <= 1e-12);
        rows.push(vec![case as f64, ab, ba, bc, ac]);
    }
    out.table(
        "w1_metric.csv",
        csv_table(&["case", "d_ab", "d_ba", "d_bc", "d_ac"], rows),
    );
    out.push(check(
        "symmetry",
        sym == 100,
        format!("{sym}/100 pairs exactly symmetric and nonnegative"),
    ));
    out.push(check(
        "identity",
        zero == 100,
        format!("{zero}/100 self-distances exactly 0"),
    ));
    out.push(check(
        "triangle",
        tri == 100,
        format!(
            "{tri}/100 triples within 1e-12, worst excess {}",
            g3(worst_tri)
        ),
    ));

    let oracle = w(
        &Measure1D::lebesgue(1024),
        &Measure1D::dirac(0.5).expect("finite"),
    );
    out.push(check(
        "lebesgue vs dirac",
        (oracle - 0.25).abs() <= 1e-12,
        format!("W1(m, δ_1/2) = {oracle}, exact 1/4"),
    ));

    let skew = affine_skew();
    let lambda = skew.lambda();
    let mut rows = Vec::new();
    let mut ok = 0;
    for case in 0..50 {
        let x: f64 = rng.random();
        let (mu, nu) = (random_measure(&mut rng), random_measure(&mut rng));
        let g = |y: f64| skew.fiber_value(x, y).unwrap_or(f64::NAN);
        let before = w(&mu, &nu);
        let after = match (pushforward_fiber(g, &mu, 1), pushforward_fiber(g, &nu, 1)) {
            (Ok(a), Ok(b)) => w(&a, &b),
            _ => f64::NAN,
        };
        ok += usize::from(after <= lambda * before + 1e-10);
        rows.push(vec![case as f64, x, before, after]);
    }
    out.table(
        "w1_contraction.csv",
        csv_table(&["case", "x", "w_before", "w_after"], rows),
    );
    out.push(check(
        "fiber contraction",
        ok == 50,
        format!(
            "{ok}/50 pairs satisfy W1(F*μ, F*ν) ≤ λ W1(μ, ν) + 1e-10 with λ = {}",
            f6(lambda)
        ),
    ));

    let mut rows = Vec::new();
    let mut ok = 0;
    for case in 0..50 {
        let k = rng.random_range(2..=4);
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let a: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let mus: Vec<Measure1D> = (0..k).map(|_| random_measure(&mut rng)).collect();
        let nus: Vec<Measure1D> = (0..k).map(|_| random_measure(&mut rng)).collect();
        let mix = |ms: &[Measure1D]| {
            let parts: Vec<(f64, &Measure1D)> = a.iter().copied().zip(ms.iter()).collect();
            Measure1D::mixture(&parts)
        };
        let lhs = match (mix(&mus), mix(&nus)) {
            (Ok(m), Ok(n)) => w(&m, &n),
            _ => f64::NAN,
        };
        let rhs: f64 = (0..k).map(|i| a[i] * w(&mus[i], &nus[i])).sum();
        ok += usize::from(lhs <= rhs + 1e-12);
        rows.push(vec![case as f64, lhs, rhs]);
    }
    out.table("w1_convexity.csv", csv_table(&["case", "lhs", "rhs"], rows));
    out.push(check(
        "convexity",
        ok == 50,
        format!("{ok}/50 mixtures within 1e-12"),
    ));

    let mut rows = Vec::new();
    let mut ok = 0;
    for case in 0..50 {
        let l = rng.random_range(0.1..10.0);
        let c: f64 = rng.random();
        let omega = rng.random_range(1.0..30.0);
        let (mu, nu) = (random_measure(&mut rng), random_measure(&mut rng));
        let g = |y: f64| {
            if case % 2 == 0 {
                l * (y - c).abs()
            } else {
                l * (omega * y).sin() / omega
            }
        };
        let lhs = (mu.integrate(g) - nu.integrate(g)).abs();
        let rhs = l * w(&mu, &nu);
        ok += usize::from(lhs <= rhs + 1e-12);
        rows.push(vec![case as f64, l, lhs, rhs]);
    }
    out.table(
        "w1_lipschitz.csv",
        csv_table(&["case", "lip", "lhs", "rhs"], rows),
    );
    out.push(check(
        "lipschitz test functions",
        ok == 50,
        format!("{ok}/50 pairs within 1e-12"),
    ));
}

// ---------------------------------------------------------- transfer

fn ulam_density(map: &PiecewiseExpandingMap, bins: usize, exec: Exec) -> Result<DensityGrid> {
    let op = ulam_matrix_with(map, bins, exec);
    let spec = invariant_density_with(
        &op,
        PowerIteration {
            tol: 1e-13,
            max_iter: 50_000,
            exec,
            ..Default::default()
        },
    )?;
    Ok(spec.invariant_density)
}

fn transfer_suite(exec: Exec, out: &mut Collector) {
    let doubling = PiecewiseExpandingMap::doubling();
    if let Some(h) = out.ok("doubling density", ulam_density(&doubling, 1024, exec)) {
        let l1 = h
            .l1_distance(&DensityGrid::uniform(1024))
            .unwrap_or(f64::NAN);
        out.push(check(
            "doubling density",
            l1 <= 1e-10,
            format!("L1 distance to 1 is {}", g3(l1)),
        ));
        out.table("transfer_doubling_density.csv", h.to_csv());
    }

    let cos = Observable1D::new(|x| (2.0 * std::f64::consts::PI * x).cos());
    let pcos = pf_apply(&doubling, &cos);
    let xs: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| pcos.eval(x)).collect();
    let worst = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    out.push(check(
        "cosine annihilated",
        worst <= 1e-12,
        format!("max |P cos 2πx| = {} on 1001 points", g3(worst)),
    ));
    out.table(
        "transfer_pf_cos.csv",
        csv_table(
            &["x", "pf_cos"],
            xs.iter().zip(&vals).map(|(&x, &v)| vec![x, v]),
        ),
    );

    let lorenz = PiecewiseExpandingMap::lorenz(0.75).expect("alpha 0.75 is valid");
    let dens: Vec<Option<DensityGrid>> = [1024, 2048, 4096]
        .iter()
        .map(|&n| {
            out.ok(
                &format!("lorenz density {n}"),
                ulam_density(&lorenz, n, exec),
            )
        })
        .collect();
    if let [Some(h1), Some(h2), Some(h4)] = &dens[..] {
        let common = |h: &DensityGrid| h.coarsen(1024).expect("1024 divides the grid");
        let (c1, c2, c4) = (h1.clone(), common(h2), common(h4));
        let gap_a = c1.l1_distance(&c2).unwrap_or(f64::NAN);
        let gap_b = c2.l1_distance(&c4).unwrap_or(f64::NAN);
        let raw_a = h1.l1_distance_refined(h2).unwrap_or(f64::NAN);
        let raw_b = h2.l1_distance_refined(h4).unwrap_or(f64::NAN);
        out.push(check(
            "grid doubling",
            gap_b <= 0.5 * gap_a,
            format!(
                "L1 gaps at 1024 bins: 1024→2048 {}, 2048→4096 {} (ratio {}); unaveraged gaps {} and {}",
                g3(gap_a),
                g3(gap_b),
                f6(gap_b / gap_a),
                g3(raw_a),
                g3(raw_b)
            ),
        ));
        out.table(
            "transfer_grid_doubling.csv",
            csv_table(
                &["fine_bins", "gap_common", "gap_unaveraged"],
                vec![vec![2048.0, gap_a, raw_a], vec![4096.0, gap_b, raw_b]],
            ),
        );
        out.table("transfer_lorenz_density_4096.csv", h4.to_csv());
    }

    let f0 = DensityGrid::from_fn(1024, |x| 1.0 + (x - 0.5));
    if let Some(series) = out.ok(
        "convergence rate",
        convergence_rate(&doubling, &f0, &Observable1D::identity(), 40),
    ) {
        let rate = series.rate.unwrap_or(f64::NAN);
        out.push(check(
            "convergence rate",
            rate > 0.45 && rate < 0.55,
            format!("fitted rate {} over terms {:?}", f6(rate), series.window),
        ));
        out.table(
            "transfer_convergence.csv",
            csv_table(
                &["n", "term"],
                series
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(n, &t)| vec![n as f64, t]),
            ),
        );
    }
}

// ---------------------------------------------------------------- LY

fn ly_suite(seed: u64, exec: Exec, out: &mut Collector) {
    let cfg = ProbeConfig {
        seed,
        exec,
        ..Default::default()
    };
    let cases = [
        (
            "doubling",
            PiecewiseExpandingMap::doubling(),
            1.0,
            0.6,
            true,
        ),
        (
            "lorenz",
            PiecewiseExpandingMap::lorenz(0.75).expect("alpha 0.75 is valid"),
            2.0,
            1.0,
            false,
        ),
    ];
    for (name, map, p, bound, inclusive) in cases {
        let probe = lasota_yorke_probe(&map, p, 50, cfg);
        let within = if inclusive {
            probe.beta <= bound
        } else {
            probe.beta < bound
        };
        out.push(check(
            format!("{name} p={p}"),
            probe.feasible && within,
            format!(
                "β = {}, C = {}, feasible {} over {} densities (bound {}{})",
                f6(probe.beta),
                f6(probe.c),
                probe.feasible,
                probe.trials.len(),
                if inclusive { "≤ " } else { "< " },
                bound
            ),
        ));
        out.table(
            &format!("ly_{name}.csv"),
            csv_table(
                &["trial", "norm_pf", "norm_f", "l1_f"],
                probe
                    .trials
                    .iter()
                    .enumerate()
                    .map(|(k, t)| vec![k as f64, t.0, t.1, t.2]),
            ),
        );
    }
}

// ------------------------------------------------------------- norms

/// A piecewise-linear function with jumps, as `(cuts, left values, right
/// values)` per piece, tagged at its cuts.
fn random_piecewise_linear(rng: &mut impl Rng, max_pieces: usize) -> (Observable1D, f64) {
    let pieces = rng.random_range(1..=max_pieces);
    let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.random::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let ends: Vec<(f64, f64)> = (0..pieces)
        .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect();
    let sup = ends
        .iter()
        .fold(0.0f64, |m, &(a, b)| m.max(a.abs()).max(b.abs()));
    let tags = cuts.clone();
    let h = Observable1D::new(move |x| {
        let k = cuts[1..].partition_point(|&c| c <= x).min(pieces - 1);
        let len = cuts[k + 1] - cuts[k];
        let t = if len > 0.0 { (x - cuts[k]) / len } else { 0.0 };
        ends[k].0 * (1.0 - t) + ends[k].1 * t
    })
    .with_breakpoints(tags);
    (h, sup)
}

fn random_square_function(rng: &mut impl Rng) -> Observable2D {
    let terms: Vec<(Observable1D, f64, f64)> = (0..3)
        .map(|_| {
            let (phi, _) = random_piecewise_linear(rng, 6);
            (
                phi,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    Observable2D::new(move |x, y| {
        terms
            .iter()
            .map(|(phi, a, b)| a * phi.eval(x) * (1.0 + b * y))
            .sum()
    })
}

fn norms_suite(seed: u64, exec: Exec, out: &mut Collector) {
    let mut rng = rng::stream(seed, 0);

    let grid = 1024;
    let mut rows = Vec::new();
    let mut ok = 0;
    for case in 0..20 {
        let f = random_square_function(&mut rng);
        let (lhs, rhs) = projection_check(&f, grid);
        ok += usize::from(lhs <= 2.0 * rhs * (1.0 + 1e-12));
        rows.push(vec![case as f64, lhs, rhs]);
    }
    out.table(
        "norms_projection.csv",
        csv_table(&["case", "var_1_1_pi_f", "var_square_f"], rows),
    );
    out.push(check(
        "projection",
        ok == 20,
        format!("{ok}/20 functions with var_{{1,1}}(πf) ≤ 2 var^□(f)"),
    ));

    let mut rows = Vec::new();
    let mut ok = 0;
    for case in 0..20 {
        let a = rng.random_range(0.1..2.0);
        let (w1, w2, ph) = (
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(0.0..6.3),
        );
        let b = rng.random_range(0.0..1.0);
        let center: Point = [rng.random(), rng.random()];
        let radius = rng.random_range(0.05..0.5);
        let bump = Observable2D::bump(center, radius);
        let lip = a * (f64::abs(w1) + f64::abs(w2)) + b / radius;
        let f =
            Observable2D::new(move |x, y| a * (w1 * x + w2 * y + ph).sin() + b * bump.eval(x, y))
                .with_lipschitz(lip);
        let v = var_square_with(&f, 512, exec).value;
        let declared = f.lipschitz().unwrap_or(f64::NAN);
        ok += usize::from(v <= declared * (1.0 + 1e-12));
        rows.push(vec![case as f64, v, declared]);
    }
    out.table(
        "norms_lipschitz.csv",
        csv_table(&["case", "var_square", "lip"], rows),
    );
    out.push(check(
        "var^□ ≤ Lip",
        ok == 20,
        format!("{ok}/20 Lipschitz functions"),
    ));

    let samples = 1 << 14;
    let eps = dyadic_epsilons(14);
    let mut rows = Vec::new();
    let mut ok = 0;
    for case in 0..20 {
        let r = if case % 2 == 0 { 1.0 } else { 0.5 };
        let (h, sup) = random_piecewise_linear(&mut rng, 8);
        let s = SampledFunction::new(&h, samples);
        let var = s.var_p_r(Exponent::Finite(1.0), r, &eps);
        let l1 = s.lp_norm(Exponent::Finite(1.0));
        let bound = OSC_RADIUS_BOUND.powf(r - 1.0) * (var + l1);
        ok += usize::from(sup <= bound * (1.0 + 1e-12));
        rows.push(vec![case as f64, r, sup, bound]);
    }
    out.table(
        "norms_sup_bound.csv",
        csv_table(&["case", "r", "sup", "bound"], rows),
    );
    out.push(check(
        "sup bound",
        ok == 20,
        format!("{ok}/20 functions with ‖h‖_∞ ≤ A^(r-1) ‖h‖_(1,r)"),
    ));

    let mut rows = Vec::new();
    let mut ok = 0;
    let mut total = 0;
    for case in 0..10 {
        let (h, _) = random_piecewise_linear(&mut rng, 8);
        for p in [1.0, 2.0, 3.0] {
            let c = compare_variations(&h, p);
            total += 1;
            ok += usize::from(c.holds && c.certified);
            rows.push(vec![case as f64, p, c.var_1_r, c.var_p_r, c.var_p]);
        }
    }
    out.table(
        "norms_variation_chain.csv",
        csv_table(&["case", "p", "var_1_r", "var_p_r", "var_p"], rows),
    );
    out.push(check(
        "variation chain",
        ok == total,
        format!("{ok}/{total} tagged functions satisfy var_(1,1/p) ≤ var_(p,1/p) ≤ 2^(1/p) var_p"),
    ));

    let f = Observable2D::bump([0.5, 0.5], 0.5);
    if let Some(growth) = out.ok(
        "var^□ growth",
        var_square_growth(&lorenz_model(), &f, 3, 512, exec),
    ) {
        let ok = growth.iter().filter(|g| g.holds).count();
        let detail: Vec<String> = growth
            .iter()
            .map(|g| format!("n={}: {} ≤ {}", g.n, f6(g.lhs), f6(g.rhs)))
            .collect();
        out.push(check(
            "var^□ growth",
            ok == growth.len() && growth.len() == 3,
            detail.join("; "),
        ));
        out.table(
            "norms_growth.csv",
            csv_table(
                &["n", "lhs", "rhs"],
                growth.iter().map(|g| vec![g.n as f64, g.lhs, g.rhs]),
            ),
        );
    }
}

// ------------------------------------------------------ correlations

fn correlations_suite(seed: u64, exec: Exec, out: &mut Collector) {
    let lorenz = System::Skew(lorenz_model());
    let bump = Observable2D::bump([0.5, 0.5], 0.5);
    if let Some(o) = out.ok("lorenz orbit", orbit(&lorenz, 10_000_000, 10_000, seed)) {
        if let Some(s) = out.ok(
            "lorenz correlations",
            correlation_series_with(&bump, &bump, &o, 40, exec),
        ) {
            let rate = s.fitted_rate.unwrap_or(f64::NAN);
            let r2 = s.r_squared.unwrap_or(f64::NAN);
            out.push(check(
                "lorenz decay",
                s.window.len() >= 3 && rate < 1.0 && r2 >= 0.9,
                format!(
                    "rate {} with R² {} over lags 1..={} (noise floor {})",
                    f6(rate),
                    f6(r2),
                    s.window.len(),
                    g3(s.noise_floor)
                ),
            ));
            out.table("corr_lorenz.csv", s.to_csv());
        }
    }

    let affine = System::Skew(affine_skew());
    let x = base_coordinate();
    let corr = out
        .ok(
            "affine orbit",
            orbit(&affine, 10_000_000, 10_000, seed.wrapping_add(1)),
        )
        .and_then(|o| {
            out.ok(
                "affine correlations",
                correlation_series_with(&x, &x, &o, 40, exec),
            )
        });
    let f0 = DensityGrid::from_fn(1024, |x| 1.0 + (x - 0.5));
    let conv = out.ok(
        "doubling convergence",
        convergence_rate(
            affine.as_skew().map(|s| s.base()).expect("skew"),
            &f0,
            &Observable1D::identity(),
            40,
        ),
    );
    if let (Some(c), Some(t)) = (corr, conv) {
        let a = c.fitted_rate.unwrap_or(f64::NAN);
        let b = t.rate.unwrap_or(f64::NAN);
        out.push(check(
            "affine oracle",
            (a - b).abs() <= 0.1,
            format!(
                "correlation rate {} vs transfer-operator rate {}",
                f6(a),
                f6(b)
            ),
        ));
        out.table("corr_affine.csv", c.to_csv());
    }
}

// --------------------------------------------------------- dimension

fn dimension_suite(seed: u64, exec: Exec, out: &mut Collector) {
    let affine = System::Skew(affine_skew());
    if let Some(o) = out.ok("affine orbit", orbit(&affine, 10_000_000, 10_000, seed)) {
        let radii = geometric_radii(0.1, 0.5, 10);
        let targets = spread_targets(&o, 5);
        let reports = exec.map_slice(&targets, |&t| {
            local_dimension_with(&o.points, t, &radii, 2, Exec::Sequential)
        });
        let mut rows = Vec::new();
        let mut slopes = Vec::new();
        for (i, r) in reports.into_iter().enumerate() {
            match r {
                Ok(r) => {
                    slopes.push(r.slope);
                    for (&rad, &m) in r.radii.iter().zip(&r.ball_masses) {
                        rows.push(vec![i as f64, rad, m]);
                    }
                }
                Err(e) => out.push(check(
                    format!("affine target {i}"),
                    false,
                    format!("error: {e}"),
                )),
            }
        }
        let ok = slopes
            .iter()
            .filter(|s| (*s - AFFINE_DIMENSION).abs() <= 0.15)
            .count();
        out.push(check(
            "affine local dimension",
            ok == 5,
            format!(
                "{ok}/5 slopes within 0.15 of {}: {:?}",
                f6(AFFINE_DIMENSION),
                slopes.iter().map(|s| f6(*s)).collect::<Vec<_>>()
            ),
        ));
        out.table("dim_affine.csv", csv_table(&["target", "r", "mass"], rows));

        if let Some(fr) = out.ok(
            "affine formula",
            dimension_formula(affine.as_skew().expect("skew"), &o),
        ) {
            out.push(check(
                "affine formula",
                (fr.value - AFFINE_DIMENSION).abs() <= 1e-3 && fr.drift <= 1e-3,
                format!(
                    "1 + Ψ/Φ = {} (exact {}), drift {}",
                    fr.value,
                    AFFINE_DIMENSION,
                    g3(fr.drift)
                ),
            ));
        }
    }

    let lorenz = System::Skew(lorenz_model());
    let Some(o) = out.ok("lorenz orbit", orbit(&lorenz, 10_000_000, 10_000, seed)) else {
        return;
    };
    let Some(fr) = out.ok(
        "lorenz formula",
        dimension_formula(lorenz.as_skew().expect("skew"), &o),
    ) else {
        return;
    };
    let targets = spread_targets(&o, 5);
    drop(o);
    let radii = geometric_radii(0.2, 0.5, 22);
    let cfg = StreamedConfig {
        seed,
        exec,
        ..Default::default()
    };
    let Some(reports) = out.ok(
        "lorenz box counts",
        local_dimension_streamed(&lorenz, &targets, &radii, cfg),
    ) else {
        return;
    };
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for (i, r) in reports.into_iter().enumerate() {
        match r {
            Ok(r) => {
                slopes.push(r.slope);
                for (&rad, &m) in r.radii.iter().zip(&r.ball_masses) {
                    rows.push(vec![i as f64, rad, m]);
                }
            }
            Err(e) => out.push(check(
                format!("lorenz target {i}"),
                false,
                format!("error: {e}"),
            )),
        }
    }
    let ok = slopes
        .iter()
        .filter(|s| (*s / fr.value - 1.0).abs() <= 0.1)
        .count();
    out.push(check(
        "lorenz formula vs box slope",
        ok == 5,
        format!(
            "{ok}/5 slopes within 10% of 1 + Ψ/Φ = {}: {:?}",
            f6(fr.value),
            slopes.iter().map(|s| f6(*s)).collect::<Vec<_>>()
        ),
    ));
    out.table("dim_lorenz.csv", csv_table(&["target", "r", "mass"], rows));
    out.table(
        "dim_lorenz_targets.csv",
        csv_table(
            &["target", "x", "y"],
            targets
                .iter()
                .enumerate()
                .map(|(i, t)| vec![i as f64, t[0], t[1]]),
        ),
    );
}

// ------------------------------------------------------------ loglaw

fn loglaw_cfg(seed: u64, exec: Exec) -> LoglawConfig {
    LoglawConfig {
        samples: 200,
        horizon: 100_000_000,
        seed: seed.wrapping_add(SAMPLE_SEED_OFFSET),
        exec,
        ..Default::default()
    }
}

/// Targets for the Lorenz hitting experiments: fixed, well-separated indices
/// along one seeded orbit.
fn lorenz_targets(seed: u64, count: usize) -> Result<Vec<Point>> {
    let o = orbit(&System::Skew(lorenz_model()), 1_000_000, 10_000, seed)?;
    Ok((1..=count).map(|i| o.points[100_003 * i]).collect())
}

fn loglaw_row(name: &str, r: &LoglawReport, out: &mut Collector) {
    out.table(&format!("loglaw_{name}.csv"), r.to_csv());
}

fn loglaw_suite(seed: u64, exec: Exec, out: &mut Collector) {
    let radii = geometric_radii(0.0625, 0.5, 7);
    let cases: [(&str, System, f64); 2] = [
        (
            "doubling",
            System::Interval(PiecewiseExpandingMap::doubling()),
            1.0,
        ),
        ("affine", System::Skew(affine_skew()), AFFINE_DIMENSION),
    ];
    for (name, system, d) in cases {
        let Some(o) = out.ok(
            &format!("{name} target"),
            orbit(&system, 100_004, 10_000, seed),
        ) else {
            continue;
        };
        let target = o.points[100_003];
        if let Some(r) = out.ok(
            name,
            loglaw_exponent_with(&system, target, &radii, loglaw_cfg(seed, exec)),
        ) {
            out.push(check(
                format!("{name} slope"),
                (r.slope - d).abs() <= 0.15,
                format!(
                    "slope {} vs {} (R² {})",
                    f6(r.slope),
                    f6(d),
                    f6(r.fit.r_squared)
                ),
            ));
            loglaw_row(name, &r, out);
        }
    }

    let lorenz = System::Skew(lorenz_model());
    let Some(o) = out.ok("lorenz orbit", orbit(&lorenz, 10_000_000, 10_000, seed)) else {
        return;
    };
    let Some(fr) = out.ok(
        "lorenz formula",
        dimension_formula(lorenz.as_skew().expect("skew"), &o),
    ) else {
        return;
    };
    drop(o);
    let Some(targets) = out.ok("lorenz targets", lorenz_targets(seed, 3)) else {
        return;
    };
    let radii = geometric_radii(0.0625, 0.5, 14);
    for (i, t) in targets.iter().enumerate() {
        if let Some(r) = out.ok(
            &format!("lorenz target {i}"),
            loglaw_exponent_with(&lorenz, *t, &radii, loglaw_cfg(seed, exec)),
        ) {
            out.push(check(
                format!("lorenz target {i}"),
                (r.slope - fr.value).abs() <= 0.15,
                format!(
                    "slope {} vs 1 + Ψ/Φ = {} at ({}, {}), {} radii dropped",
                    f6(r.slope),
                    f6(fr.value),
                    f6(t[0]),
                    f6(t[1]),
                    r.dropped_radii.len()
                ),
            ));
            loglaw_row(&format!("lorenz_{i}"), &r, out);
        }
    }
}

// -------------------------------------------------------------- flow

fn rk4_linear(params: &SingularityParams, p0: [f64; 3], t: f64, steps: usize) -> [f64; 3] {
    let l = [params.lambda1, params.lambda2, params.lambda3];
    let h = t / steps as f64;
    let field = |p: [f64; 3]| [l[0] * p[0], l[1] * p[1], l[2] * p[2]];
    let mut p = p0;
    for _ in 0..steps {
        let k1 = field(p);
        let k2 = field(std::array::from_fn(|i| p[i] + 0.5 * h * k1[i]));
        let k3 = field(std::array::from_fn(|i| p[i] + 0.5 * h * k2[i]));
        let k4 = field(std::array::from_fn(|i| p[i] + h * k3[i]));
        p = std::array::from_fn(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    p
}

fn flow_check(name: &str, r: &FlowLoglawReport, expected: Option<f64>, out: &mut Collector) {
    out.push(check(
        format!("{name} flow vs section"),
        (r.slope_flow - r.slope_section).abs() <= 0.1,
        format!(
            "flow slope {} vs section slope {}",
            f6(r.slope_flow),
            f6(r.slope_section)
        ),
    ));
    if let Some(d) = expected {
        out.push(check(
            format!("{name} flow slope"),
            (r.slope_flow - d).abs() <= 0.15,
            format!("flow slope {} vs d_flow - 1 = {}", f6(r.slope_flow), f6(d)),
        ));
    }
    out.table(&format!("flow_{name}.csv"), r.to_csv());
}

fn flow_suite(seed: u64, exec: Exec, out: &mut Collector) {
    let params = SingularityParams::new(1.0, -2.0, -0.75).expect("valid singularity");
    let mut rng = rng::stream(seed, 0);

    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for case in 0..100 {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let (s, t) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let a = linear_flow(&params, p, s + t);
        let b = linear_flow(&params, linear_flow(&params, p, s), t);
        let err = (0..3)
            .map(|i| (a[i] - b[i]).abs() / a[i].abs().max(1.0))
            .fold(0.0, f64::max);
        worst = worst.max(err);
        rows.push(vec![case as f64, s, t, err]);
    }
    out.table(
        "flow_group.csv",
        csv_table(&["case", "s", "t", "error"], rows),
    );
    out.push(check(
        "group property",
        worst <= 1e-12,
        format!("worst error {}", g3(worst)),
    ));

    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for case in 0..100 {
        let x1 = rng.random_range(1e-3..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let x2 = rng.random_range(-1.0..1.0);
        let (Ok(exit), Ok(t)) = (
            singular_return(&params, x1, x2),
            singular_return_time(&params, x1),
        ) else {
            worst = f64::INFINITY;
            continue;
        };
        let p = rk4_linear(&params, [x1, x2, 1.0], t, 20_000);
        let err = (p[0] - exit.side as f64)
            .abs()
            .max((p[1] - exit.x2).abs())
            .max((p[2] - exit.x3).abs());
        worst = worst.max(err);
        rows.push(vec![case as f64, x1, x2, err]);
    }
    out.table(
        "flow_singular_return.csv",
        csv_table(&["case", "x1", "x2", "error"], rows),
    );
    out.push(check(
        "singular return",
        worst <= 1e-10,
        format!("worst deviation from RK4 integration {}", g3(worst)),
    ));

    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for delta in [0.05, 0.1, 0.5, 1.0] {
        let closed = singular_time_integral(&params, delta);
        let quad = singular_time_quadrature(&params, delta, 2000);
        worst = worst.max((closed - quad).abs());
        rows.push(vec![delta, closed, quad]);
    }
    out.table(
        "flow_time_integral.csv",
        csv_table(&["delta", "closed_form", "quadrature"], rows),
    );
    out.push(check(
        "return-time integral",
        worst <= 1e-6,
        format!("worst difference {}", g3(worst)),
    ));

    let cfg = LoglawConfig {
        samples: 200,
        horizon: 10_000_000,
        seed: seed.wrapping_add(SAMPLE_SEED_OFFSET),
        exec,
        ..Default::default()
    };
    let radii = geometric_radii(0.0625, 0.5, 7);
    let constant: [(&str, System, f64); 2] = [
        (
            "doubling",
            System::Interval(PiecewiseExpandingMap::doubling()),
            1.0,
        ),
        ("affine", System::Skew(affine_skew()), AFFINE_DIMENSION),
    ];
    for (name, system, d) in constant {
        let Some(o) = out.ok(
            &format!("{name} target"),
            orbit(&system, 100_004, 10_000, seed),
        ) else {
            continue;
        };
        let target = FlowPoint::new(o.points[100_003], 0.5);
        let Some(flow) = out.ok(name, SuspensionFlow::constant(system, 1.0)) else {
            continue;
        };
        if let Some(r) = out.ok(name, flow_loglaw(&flow, &target, &radii, cfg, None)) {
            flow_check(name, &r, Some(d), out);
        }
    }

    let lorenz = System::Skew(lorenz_model());
    let flow = make_lorenz_roof(&params, lorenz, 1.0);
    let target = lorenz_targets(seed, 1).map(|t| FlowPoint::new(t[0], 0.5));
    if let (Some(flow), Some(target)) =
        (out.ok("lorenz flow", flow), out.ok("lorenz target", target))
    {
        let radii = geometric_radii(0.0625, 0.5, 9);
        if let Some(r) = out.ok(
            "lorenz",
            flow_loglaw(&flow, &target, &radii, cfg, Some(&params)),
        ) {
            flow_check("lorenz", &r, None, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use singhyp_core::Error;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(parse_selection("all").unwrap().len(), 9);
        assert!(parse_selection("nope").is_err());
    }

    #[test]
    fn criteria_are_numbered_in_order() {
        let n: Vec<usize> = Suite::ALL.iter().map(|s| s.criterion()).collect();
        assert_eq!(n, (1..=9).collect::<Vec<_>>());
    }

    #[test]
    fn rk4_matches_closed_form() {
        let p = SingularityParams::new(1.0, -2.0, -0.75).unwrap();
        let a = rk4_linear(&p, [0.1, 0.5, 1.0], 1.5, 10_000);
        let b = linear_flow(&p, [0.1, 0.5, 1.0], 1.5);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn piecewise_linear_sup_is_exact() {
        let mut rng = rng::stream(5, 0);
        for _ in 0..10 {
            let (h, sup) = random_piecewise_linear(&mut rng, 5);
            let sampled = (0..=10_000)
                .map(|k| h.eval(k as f64 / 10_000.0).abs())
                .fold(0.0, f64::max);
            assert!(sampled <= sup + 1e-12);
        }
    }

    #[test]
    fn failed_step_becomes_a_failed_check() {
        let mut c = Collector::default();
        let r: Result<()> = Err(Error::AllMissing);
        assert!(c.ok("x", r).is_none());
        assert!(!c.checks[0].pass);
    }
}
