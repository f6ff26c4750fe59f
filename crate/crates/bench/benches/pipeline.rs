use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use contour_lcu::apps::{self, AppOptions};
use contour_lcu::blockenc::{dilate, qsvt_inverse_encoding, shifted_operator_encoding};
use contour_lcu::contour::make_circle;
use contour_lcu::numkit::{cx, spectral_norm};
use contour_lcu::polyapprox::build_inverse_poly;
use contour_lcu::quadrature::{riemann_sum_matrix, HolomorphicFunction};
use contour_lcu::sampler::{prepare_definition2, run_estimator, SamplingMode};
use contour_lcu_bench::{disk_matrix, hamiltonian_problem};

fn quadrature(c: &mut Criterion) {
    let a = disk_matrix(8, 2.0);
    let contour = make_circle(cx(0.0, 0.0), 1.5).unwrap();
    let f = HolomorphicFunction::exp(1.0);
    let mut g = c.benchmark_group("riemann_sum");
    for m in [64usize, 1024] {
        let nodes = contour.discretize(m);
        g.bench_with_input(BenchmarkId::from_parameter(m), &nodes, |b, nodes| {
            b.iter(|| riemann_sum_matrix(black_box(&a), nodes, &f).unwrap())
        });
    }
    g.finish();
}

fn inverse_poly(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_inverse_poly");
    g.sample_size(10);
    for delta in [0.25, 0.1] {
        g.bench_with_input(BenchmarkId::from_parameter(delta), &delta, |b, &d| {
            b.iter(|| build_inverse_poly(d, 1e-3).unwrap())
        });
    }
    g.finish();
}

fn node_encoding(c: &mut Criterion) {
    let a = disk_matrix(4, 1.5);
    let alpha = spectral_norm(&a);
    let ua = dilate(&a, alpha).unwrap();
    let p = build_inverse_poly(0.1, 1e-3).unwrap();
    c.bench_function("node_encoding", |b| {
        b.iter(|| qsvt_inverse_encoding(&shifted_operator_encoding(&ua, black_box(cx(1.2, 0.3))).unwrap(), &p).unwrap())
    });
}

fn end_to_end(c: &mut Criterion) {
    let mut g = c.benchmark_group("hamiltonian_apply");
    g.sample_size(10);
    for n in [2usize, 4] {
        let p = hamiltonian_problem(n, 0.1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| apps::solve_problem(p, &AppOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn sampler(c: &mut Criterion) {
    let p = hamiltonian_problem(2, 0.2);
    let s = apps::setup(&p).unwrap();
    let o = p.observable_or_default();
    let opts = apps::definition2_options(&s, SamplingMode::ShotSampled, 1);
    let prepared = prepare_definition2(&s.a, &s.psi, &o, &s.f, &s.contour, 0.2, 0.1, &opts).unwrap();
    let mut g = c.benchmark_group("sampler");
    g.sample_size(10);
    g.bench_function("shots", |b| b.iter(|| run_estimator(&prepared.plan, &s.psi, &o).unwrap()));
    g.finish();
}

criterion_group!(benches, quadrature, inverse_poly, node_encoding, end_to_end, sampler);
criterion_main!(benches);
