use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssep_core::spectral::find_eigenvalues;
use ssep_core::{EigenBasis, SpectralFunction};

fn roots(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen_solve");
    for count in [16, 64, 256] {
        group.bench_with_input(BenchmarkId::new("roots", count), &count, |b, &count| {
            b.iter(|| find_eigenvalues(count, 1e-14).unwrap())
        });
    }
    group.bench_function("basis_64", |b| b.iter(|| EigenBasis::new(64).unwrap()));
    group.finish();
}

fn operators(c: &mut Criterion) {
    let basis = EigenBasis::new(64).unwrap();
    let coeffs: Vec<f64> = (1..=64).map(|k| 1.0 / (k * k) as f64).collect();
    let f = SpectralFunction::from_coeffs(&basis, &coeffs).unwrap();
    c.bench_function("semigroup_64", |b| b.iter(|| f.semigroup(0.1).unwrap()));
    c.bench_function("inverse_laplacian_64", |b| b.iter(|| f.inverse_laplacian()));
    c.bench_function("node_values_64", |b| b.iter(|| f.node_values(0)));
}

criterion_group!(benches, roots, operators);
criterion_main!(benches);
