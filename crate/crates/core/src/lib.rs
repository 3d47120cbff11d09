#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algorithm;
pub mod beamformer;
pub mod bench;
pub mod certificate;
pub mod conic;
pub mod decomposition;
pub mod error;
pub mod hermitian;
pub mod random;
pub mod scenario;

pub use algorithm::{algorithm1, Algorithm1Diagnostics, Algorithm1Options};
pub use beamformer::{BeamWeights, UncertaintyModel};
pub use error::{Error, Result};
pub use hermitian::{HermitianMatrix, C64};
