use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use finsler_core::duality;
use finsler_core::measures::{self, MeasureSpec};
use finsler_core::metric::{Chart, Family, MetricModel};
use finsler_core::spectral::{self, EigenOptions, EnergyFunctional, Mesh};

fn torus() -> Chart {
    Chart::torus(TAU, TAU).unwrap()
}

fn models() -> Vec<(&'static str, MetricModel)> {
    vec![
        ("riemannian", MetricModel::riemannian(torus(), [[1.5, 0.2], [0.2, 0.8]]).unwrap()),
        ("randers", MetricModel::randers(torus(), [[1.0, 0.0], [0.0, 1.0]], [0.3, 0.0]).unwrap()),
        (
            "minkowski",
            MetricModel::new(torus(), Family::Minkowski { a: [[1.0, 0.0], [0.0, 1.0]], quartic: 0.5, drift: [0.1, 0.05] })
                .unwrap(),
        ),
    ]
}

fn dual_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("dual_norm");
    for (name, m) in models() {
        let norm = m.norm_at([0.3, 0.7]);
        group.bench_function(name, |b| b.iter(|| duality::dual_norm_at(&norm, black_box([0.4, -1.1]))));
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let mesh = Mesh::new(&[TAU, TAU], &[64, 64]).unwrap();
    let mut group = c.benchmark_group("energy_grad_64x64");
    for (name, m) in models() {
        let sigma = measures::density_field(&m, &mesh, &MeasureSpec::busemann_hausdorff()).unwrap();
        let ef = EnergyFunctional::new(&m, &mesh, &sigma).unwrap();
        let u: Vec<f64> = (0..mesh.len()).map(|i| mesh.coords(i)[0].sin() + 0.3 * mesh.coords(i)[1].cos()).collect();
        let mut g = vec![0.0; u.len()];
        group.bench_function(name, |b| b.iter(|| ef.numerator_grad(black_box(&u), &mut g).unwrap()));
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen_closed");
    group.sample_size(10);
    let circle = MetricModel::randers(Chart::circle(TAU).unwrap(), [[1.0, 0.0], [0.0, 0.0]], [0.3, 0.0]).unwrap();
    let mesh = Mesh::new(&[TAU], &[256]).unwrap();
    let sigma = measures::density_field(&circle, &mesh, &MeasureSpec::busemann_hausdorff()).unwrap();
    group.bench_function("randers_circle_256", |b| {
        b.iter(|| spectral::eigen_closed(&mesh, &circle, &sigma, &EigenOptions::default()).unwrap())
    });
    let flat = MetricModel::euclidean(torus()).unwrap();
    let mesh = Mesh::new(&[TAU, TAU], &[32, 32]).unwrap();
    let sigma = measures::density_field(&flat, &mesh, &MeasureSpec::busemann_hausdorff()).unwrap();
    group.bench_function("flat_torus_32", |b| {
        b.iter(|| spectral::eigen_closed(&mesh, &flat, &sigma, &EigenOptions::default()).unwrap())
    });
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let m = MetricModel::randers(torus(), [[1.0, 0.0], [0.0, 1.0]], [0.3, 0.0]).unwrap();
    let mesh = Mesh::new(&[TAU, TAU], &[64, 64]).unwrap();
    let sigma = measures::density_field(&m, &mesh, &MeasureSpec::holmes_thompson()).unwrap();
    let u = spectral::ScalarField::from_fn(mesh, |x| x[0].sin() + 0.2 * x[1].cos()).unwrap();
    c.bench_function("cheeger_sweep_64x64", |b| {
        b.iter(|| spectral::cheeger_sweep(&u, &m, &sigma, spectral::DEFAULT_LEVELS).unwrap())
    });
}

criterion_group!(benches, dual_norm, energy, eigen, sweep);
criterion_main!(benches);
