//! Run-control plumbing: deterministic seed derivation, config files,
//! checkpoint persistence, metrics sinks, dataset read auditing, and
//! atomic filesystem helpers.

pub mod audit;
pub mod checkpoint;
pub mod config;
pub mod fsutil;
pub mod metrics;
pub mod seed;

pub use audit::AccessAudit;
pub use checkpoint::{load_checkpoint_into, save_checkpoint, CheckpointManifest};
pub use config::{Mode, RunConfig};
pub use fsutil::{atomic_write, DirLock};
pub use metrics::{JsonlSink, MetricsRow, MetricsSink, NullSink, VecSink};
pub use seed::SeedSplitter;
