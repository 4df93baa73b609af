use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use contest_bench::{indexed_quadratics, top2_of_3, unit_linear};
use contest_core::pm_core::solve_pm_ne;
use contest_core::pm_fee::{fee_sweep, log_spaced_fees};
use contest_core::ro_core::solve_symmetric_ne;
use contest_core::ro_design::{lp_optimal_search, DesignObjective};
use contest_core::ro_metrics::{l1_metric, linf_metric, mc_metrics};
use contest_core::CostSpec;

fn bench_ro_solve(c: &mut Criterion) {
    let rewards = top2_of_3();
    let mut group = c.benchmark_group("ro_solve");
    for (name, slope) in [("interior", 1.0), ("all_perfect", 0.25), ("split", 0.4)] {
        let cost = CostSpec::linear(slope).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| solve_symmetric_ne(black_box(&rewards), black_box(&cost)).unwrap())
        });
    }
    group.finish();
}

fn bench_cdf_eval(c: &mut Criterion) {
    let eq = solve_symmetric_ne(&top2_of_3(), &unit_linear()).unwrap();
    c.bench_function("cdf_eval", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for k in 0..100 {
                acc += eq.cdf_eval(black_box(k as f64 / 200.0));
            }
            acc
        })
    });
}

fn bench_metrics(c: &mut Criterion) {
    let eq = solve_symmetric_ne(&top2_of_3(), &unit_linear()).unwrap();
    let mut group = c.benchmark_group("metrics");
    group.bench_function("l1_quadrature", |b| {
        b.iter(|| l1_metric(black_box(&eq)).unwrap())
    });
    group.bench_function("linf_quadrature", |b| {
        b.iter(|| linf_metric(black_box(&eq)).unwrap())
    });
    group.sample_size(20);
    group.bench_function("monte_carlo_100k", |b| {
        b.iter(|| mc_metrics(black_box(&eq), &[2.0], 100_000, 7).unwrap())
    });
    group.finish();
}

fn bench_design_search(c: &mut Criterion) {
    let cost = CostSpec::scaled_quadratic(1.0).unwrap();
    let mut group = c.benchmark_group("design_search");
    group.sample_size(10);
    group.bench_function("n3_res005_l1", |b| {
        b.iter(|| lp_optimal_search(3, black_box(&cost), DesignObjective::L1, 0.05).unwrap())
    });
    group.finish();
}

fn bench_pm(c: &mut Criterion) {
    let costs = indexed_quadratics(30);
    let mut group = c.benchmark_group("proportional");
    group.bench_function("solve_30_creators", |b| {
        b.iter(|| solve_pm_ne(black_box(&costs)).unwrap())
    });
    group.sample_size(10);
    let fees = log_spaced_fees(1e-4, 1.0, 60);
    group.bench_function("fee_sweep_30x60", |b| {
        b.iter(|| fee_sweep(black_box(&costs), &fees, &[1.0, f64::INFINITY]).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_ro_solve,
    bench_cdf_eval,
    bench_metrics,
    bench_design_search,
    bench_pm
);
criterion_main!(benches);
