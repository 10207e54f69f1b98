//! Shared fixtures for the benchmarks.

use pamper_core::synth::{zipf_imbalance, PlantedModel, Rule, SKEWED_ZIPF_EXPONENT};
use pamper_core::{generate, Corpus};

/// Method names `m001`, `m002`, ...
pub fn method_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("m{i:03}")).collect()
}

/// A skewed corpus over `methods` methods and 108 features. Every tenth
/// method below the top ten is gated on a dedicated feature pair.
pub fn skewed_corpus(methods: usize, points: usize, seed: u64) -> Corpus {
    let names = method_names(methods);
    let rules = names
        .iter()
        .skip(10)
        .step_by(10)
        .enumerate()
        .map(|(i, name)| Rule {
            weight: 0.01,
            pattern: [(2 * i, true), (2 * i + 1, true)].into(),
            methods: pamper_core::Distribution::new(vec![(name.clone(), 1.0)]).unwrap(),
        })
        .collect();
    let pm = PlantedModel {
        feature_count: 108,
        noise: 0.1,
        rules,
        fallback: zipf_imbalance(&names, SKEWED_ZIPF_EXPONENT).unwrap(),
    };
    generate(&pm, points, seed).unwrap()
}
