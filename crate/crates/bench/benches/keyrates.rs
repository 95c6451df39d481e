use criterion::{black_box, criterion_group, criterion_main, Criterion};
use cvqkd_bench as fx;
use cvqkd_core::estimation::{keyrate_finite_oneway, optimize_r};
use cvqkd_core::fading::{keyrate_fast_oneway, keyrate_fast_star, FadingNodes, UniformFade};
use cvqkd_core::fock::{pureloss_rates, thermal_rates_with, BGrid, Constellation, FockConfig, RrConditioning};
use cvqkd_core::gaussian::symplectic_eigenvalues;
use cvqkd_core::mdi::{keyrate_mdi, keyrate_mdi_optimized, keyrate_star3};
use cvqkd_core::montecarlo::study_oneway;
use cvqkd_core::oneway::keyrate_oneway;

fn gaussian(c: &mut Criterion) {
    let cm = fx::three_mode_state().unwrap();
    c.bench_function("symplectic spectrum, 3 modes", |b| {
        b.iter(|| symplectic_eigenvalues(black_box(&cm)).unwrap())
    });
    let (spec, ch) = (fx::rr_hom().unwrap(), fx::channel().unwrap());
    c.bench_function("one-way rate", |b| b.iter(|| keyrate_oneway(black_box(&spec), &ch).unwrap()));
}

fn relay(c: &mut Criterion) {
    let at = fx::relay().unwrap();
    c.bench_function("mdi rate", |b| b.iter(|| keyrate_mdi(0.98, black_box(21.0), &at).unwrap()));
    c.bench_function("mdi rate, optimized mu", |b| {
        b.iter(|| keyrate_mdi_optimized(0.98, black_box(&at)).unwrap())
    });
    let st = fx::star().unwrap();
    c.bench_function("star rate", |b| b.iter(|| keyrate_star3(1.0, black_box(10.0), &st).unwrap()));
}

fn finite(c: &mut Criterion) {
    let (spec, ch, setup) = (
        fx::thermal_dr_hom().unwrap(),
        fx::channel().unwrap(),
        fx::estimation().unwrap(),
    );
    c.bench_function("finite-size rate", |b| {
        b.iter(|| keyrate_finite_oneway(black_box(&spec), &ch, &setup).unwrap())
    });
    c.bench_function("finite-size rate, optimized r", |b| {
        b.iter(|| {
            optimize_r(
                |r| {
                    keyrate_finite_oneway(&spec, &ch, &setup.with_r(r))
                        .map(|x| x.0.raw)
                        .unwrap_or(f64::NEG_INFINITY)
                },
                1e-4,
                0.99,
            )
        })
    });
}

fn fading(c: &mut Criterion) {
    let (spec, nodes) = (fx::rr_hom().unwrap(), FadingNodes::default());
    let fade = UniformFade::new(0.5, 0.1).unwrap();
    c.bench_function("fast fading, one-way", |b| {
        b.iter(|| keyrate_fast_oneway(black_box(&fade), &spec, 1.0, &nodes).unwrap())
    });
    let fade = UniformFade::new(0.9, 0.05).unwrap();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("fast fading, star", |b| {
        b.iter(|| keyrate_fast_star(black_box(&fade), 1.0, 10.0, 1.0, &nodes).unwrap())
    });
    g.finish();
}

fn discrete(c: &mut Criterion) {
    let (con, grid) = (Constellation::new(4, 0.5).unwrap(), BGrid::default());
    c.bench_function("four-state rates, pure loss", |b| {
        b.iter(|| pureloss_rates(black_box(&con), 0.5, &grid).unwrap())
    });
    let cfg = FockConfig::with_cutoff(12);
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("four-state rates, thermal loss", |b| {
        b.iter(|| {
            thermal_rates_with(black_box(&con), 0.5, 0.01, &cfg, &grid, RrConditioning::Projected)
                .unwrap()
        })
    });
    g.bench_function("estimator study, 100 trials of 1e4", |b| {
        let ch = fx::channel().unwrap();
        b.iter(|| study_oneway(&ch, 10.0, 0.0, 10_000, 100, black_box(1)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, gaussian, relay, finite, fading, discrete);
criterion_main!(benches);
