//! Training orchestration: the supervised source phase, the source feature
//! GAN, and the three adaptation regimes (final-domain, pooled-union,
//! incremental), each optionally sourcing its "real" features from the
//! generator instead of retained source data.

pub mod adapt;
pub mod buffer;
pub mod provider;
pub mod source;

pub use adapt::{
    adapt, evaluate, evaluate_domain, AdaptationConfig, DomainOutcome, EvalHook, RunRecord,
};
pub use buffer::SampleBuffer;
pub use provider::RealFeatures;
pub use source::{train_source, train_source_gan, GanTrainReport, SourceTrainReport};
