use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pamper_bench::skewed_corpus;
use pamper_core::{
    build_tree, save_model, load_model, single_target_split, train, which_method, FeatureCatalog,
    TrainConfig,
};
use std::hint::black_box;

fn bench_build_tree(c: &mut Criterion) {
    let corpus = skewed_corpus(169, 20_000, 1);
    let split = single_target_split(&corpus);
    let cfg = TrainConfig::default();
    let mut group = c.benchmark_group("build_tree");
    for name in ["m001", "m021"] {
        let ds = &split[name];
        group.bench_function(name, |b| b.iter(|| build_tree(black_box(ds), &cfg).unwrap()));
    }
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let corpus = skewed_corpus(169, 20_000, 2);
    let cfg = TrainConfig::default();
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("169x20000", |b| {
        b.iter(|| train(black_box(&corpus), &cfg, FeatureCatalog::new()).unwrap())
    });
    group.finish();
}

fn bench_queries(c: &mut Criterion) {
    let corpus = skewed_corpus(169, 20_000, 3);
    let model = train(&corpus, &TrainConfig::default(), FeatureCatalog::new()).unwrap();
    let vectors: Vec<_> = corpus.points().iter().take(1000).map(|p| p.features.clone()).collect();
    c.bench_function("which_method/1000", |b| {
        b.iter(|| {
            for v in &vectors {
                black_box(which_method(&model, v, 15).unwrap());
            }
        })
    });
    let text = save_model(&model);
    c.bench_function("load_model", |b| {
        b.iter_batched(|| text.clone(), |t| load_model(&t).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, bench_build_tree, bench_train, bench_queries);
criterion_main!(benches);
