use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spsim_core::law::GaussianShiftKernel;
use spsim_core::*;
use std::hint::black_box;
use std::sync::Arc;

// Sequential vs thread-pool executor on the same batch of switching paths.
fn sample_batch(c: &mut Criterion) {
    let model = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let law = SwitchingLaw::homogeneous(
        |x| 1.0 / (1.0 + x[0] * x[0]),
        1.0,
        Arc::new(GaussianShiftKernel { shift: 0.0, sd: 1.0 }),
    )
    .unwrap();
    let cfg = SpConfig::new(1.0, 0.01);
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(2);
    let executors = [
        ("sequential", Executor::sequential()),
        ("parallel", Executor::with_workers(workers).unwrap()),
    ];
    let mut group = c.benchmark_group("sp_paths");
    for n in [1_000usize, 10_000] {
        for (name, ex) in &executors {
            group.bench_with_input(BenchmarkId::new(*name, n), &n, |b, &n| {
                b.iter(|| {
                    let ends = ex
                        .map(n, |i| {
                            let tr = sample_sp_trajectory(&model, &law, &[0.5], &cfg, RngStream::new(7, i as u64))?;
                            Ok(tr.renewals().len())
                        })
                        .unwrap();
                    black_box(ends.iter().sum::<usize>())
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sample_batch);
criterion_main!(benches);
