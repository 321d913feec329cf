use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use heatflow_core::besov::{heat_besov_norm, BesovMode, BesovSpec};
use heatflow_core::commutator::{commutator_direct, duhamel_reconstruct, GradedQuadrature};
use heatflow_core::euler::{euler_step, random_initial};
use heatflow_core::fields::{lacunary, random_slope, sphere_random};
use heatflow_core::{HeatSchedule, SpectralField, SphereBasis, TorusGrid};

fn torus(c: &mut Criterion) {
    let g = TorusGrid::new(2, 256).unwrap();
    let u = random_slope(g, 1.5, 1).unwrap();
    c.bench_function("torus256_heat", |b| b.iter(|| black_box(u.heat(0.01))));
    c.bench_function("torus256_grad_l3", |b| b.iter(|| black_box(u.grad_lp_norm(3.0))));
    c.bench_function("torus256_commutator", |b| b.iter(|| black_box(commutator_direct(&u, 0.01).unwrap())));
    let small = random_slope(TorusGrid::new(2, 64).unwrap(), 2.0, 2).unwrap();
    c.bench_function("torus64_duhamel16", |b| {
        b.iter(|| black_box(duhamel_reconstruct(&small, 0.1, GradedQuadrature::new(16)).unwrap()))
    });
}

fn besov(c: &mut Criterion) {
    let u = lacunary(TorusGrid::new(2, 256).unwrap(), 0.5, 6, 0).unwrap();
    let spec = BesovSpec::new(1.0 / 3.0, 3.0, BesovMode::Infinity).unwrap();
    let sched = HeatSchedule::standard();
    c.bench_function("torus256_besov_norm", |b| b.iter(|| black_box(heat_besov_norm(&u, &spec, &sched).unwrap())));
}

fn sphere(c: &mut Criterion) {
    let basis = Arc::new(SphereBasis::new(32).unwrap());
    let u = sphere_random(basis, 1.5, 1).unwrap();
    c.bench_function("sphere32_synthesis", |b| b.iter(|| black_box(u.to_grid())));
    c.bench_function("sphere32_transport", |b| b.iter(|| black_box(u.transport().unwrap())));
}

fn euler(c: &mut Criterion) {
    let v = random_initial(TorusGrid::new(2, 128).unwrap(), 7).unwrap();
    c.bench_function("euler128_rk4_step", |b| b.iter(|| black_box(euler_step(&v, 1e-3).unwrap())));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = torus, besov, sphere, euler
}
criterion_main!(benches);
