//! Fixture builders shared by the benchmarks.

use lossaudit::data::{synth_generate, SynthForm, SynthSpec};
use lossaudit::Dataset;

/// Standard benchmark dataset: n rows, 4 features, logistic Bayes model.
pub fn bench_data(n: usize, seed: u64) -> Dataset {
    synth_generate(
        &SynthSpec {
            n,
            d: 4,
            form: SynthForm::Logistic,
            theta: 0.0,
        },
        seed,
    )
    .expect("valid spec")
}
