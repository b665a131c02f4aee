//! Attribute-based zero-shot learning.
//!
//! Complementary attributes, DAP inference, rank aggregation, a bilinear
//! label-embedding learner, recognition bounds and the evaluation protocol.

pub mod attrspace;
pub mod dap;
pub mod datagen;
pub mod error;
pub mod evalkit;
mod io;
pub mod lezsl;
pub mod pacbound;
pub mod pipeline;
pub mod rankagg;

pub use attrspace::{AttributeForm, AttributeMatrix, ClassEntropy, ExpandedAttributeMatrix};
pub use dap::{AttributeClassifierBank, BankHyper, BinarizedSignatures, Scored};
pub use datagen::{DataBundle, Dataset, Partition, SplitSpec, SynthConfig};
pub use error::{Error, Result};
pub use evalkit::{DistanceMetric, EvalReport, Mode};
pub use lezsl::{BilinearModel, EmbeddingKind, TrainHyper, WeightMode};
pub use pacbound::{BoundInput, BoundReport, EmpiricalCdf, ToleranceSource};
pub use pipeline::{Method, PipelineHyper, Predictor, SamplePrediction, TrainedModel};
pub use rankagg::{AggregateOptions, AggregationResult, RankAggregator, RankProfile, SigmaPolicy};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
