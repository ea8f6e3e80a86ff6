use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use laplace_qmle::{log_bessel_k, BesselOrder};

fn log_bessel(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_bessel_k");
    // order 0 is the p = 2 likelihood kernel, -1/2 the p = 1 one
    for v in [0.0, -0.5, -1.0, 0.3] {
        let order = BesselOrder::new(v).unwrap();
        for u in [0.05, 1.5, 12.0, 80.0] {
            group.bench_with_input(BenchmarkId::new(format!("v={v}"), u), &u, |b, &u| {
                b.iter(|| log_bessel_k(order, black_box(u)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, log_bessel);
criterion_main!(benches);
