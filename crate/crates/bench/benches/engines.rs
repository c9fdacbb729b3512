use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ssep_bench::{half_filled, reservoirs};
use ssep_core::lattice::{simulate_ensemble, Engine, EnsembleSpec, InitSpec};

fn single_trajectory(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory_t0.05");
    for n in [32, 128, 512] {
        // Bulk events up to t: roughly n² · n · t.
        group.throughput(Throughput::Elements((n * n * n) as u64 / 20));
        for (label, engine) in [("uniformized", Engine::Uniformized), ("thinned", Engine::Thinned)] {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, &n| {
                b.iter_batched(
                    || half_filled(n, engine, 7),
                    |mut sim| {
                        sim.advance_to(0.05);
                        sim
                    },
                    criterion::BatchSize::SmallInput,
                )
            });
        }
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    let spec = EnsembleSpec::new(64, reservoirs(), InitSpec::Constant(0.5), vec![0.05, 0.1], 200, 3);
    group.bench_function("n64_m200_pairs", |b| {
        let mut spec = spec.clone();
        spec.pairs = true;
        b.iter(|| simulate_ensemble(&spec).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_trajectory, ensemble);
criterion_main!(benches);
