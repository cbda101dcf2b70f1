use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use minerec_bench::{sample_dataset, sample_log};
use minerec_core::discovery::{discover, AlgorithmId, DiscoveryParams};
use minerec_core::explainer::shap_values;
use minerec_core::learner::{fit, FitParams};
use minerec_core::{evaluate_all, extract};

fn features(c: &mut Criterion) {
    let mut g = c.benchmark_group("extract");
    for n in [100, 1000] {
        let log = sample_log(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &log, |b, log| b.iter(|| extract(black_box(log))));
    }
    g.finish();
}

fn quality(c: &mut Criterion) {
    let log = sample_log(500, 2);
    let mut g = c.benchmark_group("evaluate_all");
    for alg in [AlgorithmId::Alpha, AlgorithmId::Heuristics, AlgorithmId::Inductive] {
        let net = discover(alg, &log, &DiscoveryParams::default()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(alg), &net, |b, net| {
            b.iter(|| evaluate_all(black_box(&log), net))
        });
    }
    g.finish();
}

fn learner(c: &mut Criterion) {
    let data = sample_dataset(200);
    let schema: Vec<usize> = (0..data.n_features()).collect();
    let params = FitParams::default();
    c.bench_function("fit/100 trees", |b| b.iter(|| fit(black_box(&data), &schema, &params).unwrap()));
    let model = fit(&data, &schema, &params).unwrap();
    c.bench_function("shap/100 trees", |b| b.iter(|| shap_values(&model, black_box(&data.x[0])).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = features, quality, learner
}
criterion_main!(benches);
