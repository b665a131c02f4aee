//! Fixtures shared by the benchmarks.

use zsl_core::datagen::generate_synthetic;
use zsl_core::pipeline::{train_model, TrainedModel};
use zsl_core::{DataBundle, Method, PipelineHyper, SynthConfig};

/// Synthetic problem with `m` attributes and `l` unseen classes.
pub fn problem(m: usize, l: usize, samples_per_class: usize) -> DataBundle {
    generate_synthetic(&SynthConfig {
        k: 8,
        l,
        m,
        d: m.max(32),
        samples_per_class,
        ..SynthConfig::default()
    })
    .expect("benchmark config is feasible")
    .data
}

/// Trains `method` with the default hyperparameters.
pub fn trained(method: Method, data: &DataBundle) -> TrainedModel {
    train_model(method, data, &PipelineHyper::default()).expect("training succeeds")
}
