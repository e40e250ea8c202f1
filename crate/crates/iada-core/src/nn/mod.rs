//! Minimal neural-network substrate: flat parameter records plus the forward
//! and backward maps for the dense / convolutional stacks used by the models.

pub mod ops;
pub mod params;

pub use params::{Layout, ParamSet, TensorSpec};
