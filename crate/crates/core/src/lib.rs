//! Simulating the single-copy statistics of spin-1/2 direction measurements
//! with classical bits, through a shared random codebook and joint typicality.
//!
//! - [`directions`]: unit vectors, direction sets, score functions, sphere partitions.
//! - [`info`]: distributions, entropy, mutual information, channel capacity.
//! - [`typicality`]: strong and joint typicality tests and rate estimates.
//! - [`quantum`]: spin states, POVMs, and Born-rule joints.
//! - [`protocol`]: the codebook protocol and its estimators.
//! - [`frames`]: reference-frame resource arithmetic.
//! - [`experiment`]: config-driven experiments and their outputs.

pub mod directions;
pub mod error;
pub mod experiment;
pub mod frames;
pub mod info;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod typicality;

pub use error::{Error, Result};
