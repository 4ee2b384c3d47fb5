//! Sequential vs parallel throughput for the two data-parallel stages:
//! pool scoring and dedup. With the `parallel` feature off both sides run
//! the same sequential code, so the comparison is only meaningful with
//! default features.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use semisup::classifier::SoftmaxClassifier;
use semisup::dedup::{dedup_pool, dedup_pool_seq, Embedder};
use semisup::selector::{score_pool, score_pool_seq};
use semisup::syngen::{generate_labeled, generate_pool, ClassPrior, MixtureSpec};

fn mixture() -> MixtureSpec {
    MixtureSpec::new(10, 32, 3.0, 1.0, ClassPrior::Uniform, 0.1, 7).unwrap()
}

fn bench_scoring(c: &mut Criterion) {
    let spec = mixture();
    let model = SoftmaxClassifier::init(10, 32, 1).unwrap();
    let caps = vec![500usize; 10];
    let mut group = c.benchmark_group("score_pool");
    for &m in &[10_000usize, 40_000] {
        let (pool, _) = generate_pool(&spec, m, 2);
        group.throughput(Throughput::Elements(m as u64));
        group.bench_with_input(BenchmarkId::new("sequential", m), &pool, |b, pool| {
            b.iter(|| score_pool_seq(&model, pool, &caps, 3).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("parallel", m), &pool, |b, pool| {
            b.iter(|| score_pool(&model, pool, &caps, 3).unwrap());
        });
    }
    group.finish();
}

fn bench_dedup(c: &mut Criterion) {
    let spec = mixture();
    let eval = generate_labeled(&spec, 200, 3);
    let mut group = c.benchmark_group("dedup_pool");
    for &m in &[5_000usize, 20_000] {
        let (pool, _) = generate_pool(&spec, m, 4);
        group.throughput(Throughput::Elements((m * eval.len()) as u64));
        group.bench_with_input(BenchmarkId::new("sequential", m), &pool, |b, pool| {
            b.iter(|| dedup_pool_seq(pool, &eval, 100, &Embedder::Raw).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("parallel", m), &pool, |b, pool| {
            b.iter(|| dedup_pool(pool, &eval, 100, &Embedder::Raw).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scoring, bench_dedup);
criterion_main!(benches);
