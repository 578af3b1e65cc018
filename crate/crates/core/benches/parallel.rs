use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use singhyp_core::maps::{LorenzModelParams, PiecewiseExpandingMap, SkewProductMap, System};
use singhyp_core::observable::Observable2D;
use singhyp_core::par::Exec;
use singhyp_core::stats::{
    correlation_series_with, geometric_radii, loglaw_exponent_with, sample_orbit,
    var_square_growth, LoglawConfig, OrbitConfig, Start,
};
use singhyp_core::transfer::ulam_matrix_with;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn lorenz() -> SkewProductMap {
    SkewProductMap::lorenz(LorenzModelParams::default()).unwrap()
}

fn ulam(c: &mut Criterion) {
    let t = PiecewiseExpandingMap::lorenz(0.75).unwrap();
    let mut g = c.benchmark_group("ulam_4096");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ulam_matrix_with(&t, 4096, exec))
        });
    }
    g.finish();
}

fn var_square(c: &mut Criterion) {
    let f = lorenz();
    let bump = Observable2D::bump([0.5, 0.5], 0.5);
    let mut g = c.benchmark_group("var_square_growth");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| var_square_growth(&f, &bump, 2, 256, exec).unwrap())
        });
    }
    g.finish();
}

fn correlations(c: &mut Criterion) {
    let system = System::Skew(lorenz());
    let orbit = sample_orbit(
        &system,
        Start::Random,
        OrbitConfig {
            length: 1_000_000,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let bump = Observable2D::bump([0.5, 0.5], 0.5);
    let mut g = c.benchmark_group("correlation_series");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| correlation_series_with(&bump, &bump, &orbit, 40, exec).unwrap())
        });
    }
    g.finish();
}

fn loglaw(c: &mut Criterion) {
    let system = System::Interval(PiecewiseExpandingMap::doubling());
    let radii = geometric_radii(0.0625, 0.5, 7);
    let mut g = c.benchmark_group("loglaw_doubling");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = LoglawConfig {
            samples: 200,
            seed: 3,
            exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| loglaw_exponent_with(&system, [0.3, 0.0], &radii, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, ulam, var_square, correlations, loglaw);
criterion_main!(benches);
