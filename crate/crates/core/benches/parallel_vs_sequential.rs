//! Document-level parallelism against the single-thread reference path.
//! Run with `--no-default-features` to measure the build without rayon.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use xel_core::burn::{BurnModel, BurnParams, InferenceConfig};
use xel_core::synthetic::{generate, SyntheticConfig};
use xel_core::train::{train, TrainConfig};
use xel_core::{DocFeatures, FeatureSet, KbStatistics, Model, Parallelism};

fn job_counts() -> Vec<usize> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut jobs = vec![1];
    if available > 1 {
        jobs.push(available.min(8));
    }
    jobs
}

fn bench_featurize(c: &mut Criterion) {
    let corpus = generate(&SyntheticConfig::default()).unwrap();
    let stats = KbStatistics::ingest(&corpus.pages);
    let mut group = c.benchmark_group("featurize");
    for jobs in job_counts() {
        let par = Parallelism::new(jobs).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(jobs), &par, |b, par| {
            b.iter(|| {
                par.map(&corpus.documents, |_, d| {
                    DocFeatures::build(d, &stats, None, FeatureSet::Feat)
                })
            })
        });
    }
    group.finish();
}

fn bench_gradient(c: &mut Criterion) {
    let corpus = generate(&SyntheticConfig::default()).unwrap();
    let stats = KbStatistics::ingest(&corpus.pages);
    let docs: Vec<DocFeatures> = corpus
        .documents
        .iter()
        .map(|d| DocFeatures::build(d, &stats, None, FeatureSet::Feat))
        .collect();
    let model = BurnModel::new(BurnParams::init(4, 4, 128, 1), InferenceConfig::default());
    let mut group = c.benchmark_group("burn_gradient");
    group.sample_size(20);
    for jobs in job_counts() {
        let par = Parallelism::new(jobs).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(jobs), &par, |b, par| {
            b.iter(|| {
                par.map(&docs, |_, d| {
                    let mut g = model.zeroed();
                    model.objective(d, None, Some(&mut g));
                    g
                })
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    for jobs in job_counts() {
        let par = Parallelism::new(jobs).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(jobs), &par, |b, par| {
            b.iter(|| {
                let mut m = model.clone();
                black_box(train(&mut m, &docs, &cfg, par).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_featurize, bench_gradient);
criterion_main!(benches);
