//! Incremental adversarial domain adaptation (IADA) over drifting image domains.
//!
//! The crate implements the full training stack for aligning a target feature
//! encoder to a frozen source encoder through a domain discriminator, in three
//! regimes: one-step alignment against the final domain (ADA), alignment against
//! the pooled union of all intermediate domains (ADA-Union), and incremental,
//! warm-started alignment along the whole domain sequence (IADA). Each regime
//! can run with source distribution modelling (SDM): a generator trained to
//! imitate the source encoder's feature distribution stands in for retained
//! source data, so adaptation never reads the source dataset.
//!
//! The companion benchmark deforms digit images by vertical compression to
//! produce a controlled sequence of incrementally shifted domains, and the
//! harness reproduces the regime comparison table and the sub-domain count
//! sweep on it.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); production code
//! uses the [`Real`] alias, gradient verification runs in `f64`.

pub mod adversarial;
pub mod data;
pub mod engine;
pub mod error;
pub mod harness;
pub mod nets;
pub mod nn;
pub mod runtime;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{real, Scalar};

/// Working precision for training and the CLI.
pub type Real = f32;

/// Model bundle at working precision.
pub type RealBundle = nets::ModelBundle<Real>;

/// Realized domain pool at working precision.
pub type RealDomain = data::RealizedDomain<Real>;
