//! Sequential versus rayon execution of the two embarrassingly parallel stages: model
//! selection over (k, restart) and the robustness episodes over (fold, ε, repetition).
//!
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use teamtype::clustering::{select_best_model, SelectionConfig};
use teamtype::domain::place_drill;
use teamtype::harness::{cross_validate, evaluate_robustness, RobustnessConfig};
use teamtype::par::Execution;
use teamtype::pipeline::TrainConfig;
use teamtype::synth::{two_generator_corpus, Generators, PlaceDrillCorpus};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn model_selection(c: &mut Criterion) {
    let (data, _) = two_generator_corpus(&Generators::well_separated(8, 1), 120, 6, 12, 2);
    let mut group = c.benchmark_group("select_best_model");
    for (name, execution) in MODES {
        let config = SelectionConfig {
            k_min: 2,
            k_max: 10,
            restarts: 20,
            seed: 3,
            execution,
            ..SelectionConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| select_best_model(black_box(&data), 8, &config))
        });
    }
    group.finish();
}

fn robustness_episodes(c: &mut Criterion) {
    let (demos, personas) = PlaceDrillCorpus::default().generate(4);
    let folds = cross_validate(&demos, &place_drill::domain(), &TrainConfig::default()).expect("folds train");
    let mut group = c.benchmark_group("evaluate_robustness");
    group.sample_size(10);
    for (name, execution) in MODES {
        let config = RobustnessConfig {
            reps: 20,
            execution,
            ..RobustnessConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate_robustness(&folds, &demos, &personas, &config).expect("evaluation runs"))
        });
    }
    group.finish();
}

criterion_group!(benches, model_selection, robustness_episodes);
criterion_main!(benches);
