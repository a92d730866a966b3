use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use solarens::ensemble::{GbmParams, HistGbmParams, Hyperparams, ModelSpec};
use solarens::tree::{fit_cart, MaxFeatures, SplitMode, TreeHyperparams};
use solarens::ModelKind;
use solarens_bench::daylight_rows;

fn trees(c: &mut Criterion) {
    let d = daylight_rows(10, 73);
    let names = d.feature_names();
    let x = d.feature_matrix(&names).unwrap();
    let y = d.target();
    let w = vec![1.0; y.len()];
    let mut g = c.benchmark_group("cart_depth8");
    g.sample_size(10);
    for (label, mode) in [("exact", SplitMode::Exact), ("histogram", SplitMode::Histogram)] {
        let hp = TreeHyperparams {
            max_depth: Some(8),
            split_mode: mode,
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        g.bench_function(label, |b| b.iter(|| fit_cart(black_box(&x), y, &w, &hp, 7).unwrap()));
    }
    g.finish();
}

fn boosting(c: &mut Criterion) {
    let d = daylight_rows(10, 73);
    let names = d.feature_names();
    let x = d.feature_matrix(&names).unwrap();
    let y = d.target();
    let gbm = ModelSpec::new(
        Hyperparams::Gbm(GbmParams {
            n_estimators: 20,
            max_depth: Some(6),
            max_features: MaxFeatures::All,
            ..Default::default()
        }),
        73,
    )
    .unwrap();
    let hist = ModelSpec::new(
        Hyperparams::HistGbm(HistGbmParams {
            max_iter: 20,
            max_depth: Some(6),
            max_leaf_nodes: None,
            ..Default::default()
        }),
        73,
    )
    .unwrap();
    let mut g = c.benchmark_group("boost_20_stages");
    g.sample_size(10);
    g.bench_function("gbm_exact", |b| b.iter(|| gbm.fit(black_box(&x), y, &names).unwrap()));
    g.bench_function("hist_gbm", |b| b.iter(|| hist.fit(black_box(&x), y, &names).unwrap()));
    g.finish();
}

fn prediction(c: &mut Criterion) {
    let d = daylight_rows(5, 73);
    let names = d.feature_names();
    let x = d.feature_matrix(&names).unwrap();
    let y = d.target();
    let mut g = c.benchmark_group("predict");
    g.sample_size(10);
    for kind in [ModelKind::RandomForest, ModelKind::Knn, ModelKind::Ridge] {
        let mut params = Hyperparams::default_for(kind, 73);
        params.scale_estimators(50);
        let model = ModelSpec::new(params, 73).unwrap().fit(&x, y, &names).unwrap();
        g.bench_function(kind.name(), |b| b.iter(|| model.predict(black_box(&x)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, trees, boosting, prediction);
criterion_main!(benches);
