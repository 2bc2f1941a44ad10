use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use osclaims::closed::{mean_closed, second_moment_closed};
use osclaims::quadrature::{
    mean_theorem1, mean_theorem3, second_theorem2, second_theorem5, second_theorem6,
};
use osclaims::simulate::simulate_aggregates;
use osclaims::special_forms::{frak_b, FrakBParams};
use osclaims::{
    DependenceModel, LinearIntensity, ProcessSpec, QuadratureConfig, SeverityLaw, SimulationPlan,
    StructureDistribution,
};

fn bench_dep() -> DependenceModel {
    DependenceModel::exponential_mixture(
        1.0,
        SeverityLaw::exponential(10.0).unwrap(),
        SeverityLaw::exponential(1.0).unwrap(),
    )
    .unwrap()
}

fn closed(c: &mut Criterion) {
    let dep = bench_dep();
    let gamma = StructureDistribution::gamma(2.0, 2.0).unwrap();
    c.bench_function("frak_b", |b| {
        let p = FrakBParams::new(2.0, 1.0, 1.0, 0.5).unwrap();
        b.iter(|| frak_b(black_box(p)))
    });
    c.bench_function("second_moment_closed/gamma", |b| {
        b.iter(|| second_moment_closed(black_box(2.0), &gamma, &dep).unwrap())
    });
    c.bench_function("mean_closed/gamma", |b| {
        b.iter(|| mean_closed(black_box(2.0), &gamma, &dep).unwrap())
    });
}

fn quadrature(c: &mut Criterion) {
    let dep = bench_dep();
    let cfg = QuadratureConfig::default();
    let l = StructureDistribution::degenerate(1.0).unwrap();
    let nhpp = ProcessSpec::nhpp(LinearIntensity::new(0.5, 1.5).unwrap());
    let mut g = c.benchmark_group("quadrature");
    g.sample_size(20);
    g.bench_function("simplex_mean", |b| {
        b.iter(|| mean_theorem3(black_box(2.0), &l, &dep, &cfg).unwrap())
    });
    g.bench_function("simplex_second", |b| {
        b.iter(|| second_theorem5(black_box(2.0), &l, &dep, &cfg).unwrap())
    });
    g.bench_function("gap_second", |b| {
        b.iter(|| second_theorem6(black_box(2.0), &l, &dep, &cfg).unwrap())
    });
    g.bench_function("arrival_mean_nhpp", |b| {
        b.iter(|| mean_theorem1(black_box(2.0), &nhpp, &dep, &cfg).unwrap())
    });
    g.bench_function("arrival_second_nhpp", |b| {
        b.iter(|| second_theorem2(black_box(2.0), &nhpp, &dep, &cfg).unwrap())
    });
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let plan = SimulationPlan::new(
        ProcessSpec::mixed(StructureDistribution::degenerate(1.0).unwrap()),
        bench_dep(),
        2.0,
        10_000,
        1,
    )
    .unwrap();
    let mut g = c.benchmark_group("simulation");
    g.sample_size(20);
    g.bench_function("aggregates_10k", |b| {
        b.iter(|| simulate_aggregates(black_box(&plan)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, closed, quadrature, simulation);
criterion_main!(benches);
