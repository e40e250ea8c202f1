//! Data side of the benchmark: synthetic digit source data, the vertical
//! compression deformation, domain sequences, idx archives, and realized
//! domain pools.

pub mod batch;
pub mod cache;
pub mod deform;
pub mod digits;
pub mod idx;
pub mod pool;
pub mod sequence;

pub use batch::{LabeledBatch, UnlabeledBatch, IMAGE_SIDE, NUM_CLASSES};
pub use deform::{deform_batch, deform_image};
pub use digits::{synthesize_dataset, write_digit_archive};
pub use idx::Split;
pub use pool::{realize_domain, IndexStream, Pool, RealizedDomain};
pub use sequence::{make_domain_sequence, DomainSequence, DomainSpec};
