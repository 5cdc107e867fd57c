//! Likelihood expansions, EM dynamics and moment-matching landscapes for
//! Gaussian mixture models at low signal-to-noise ratio.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cumulants;
pub mod em;
pub mod error;
pub mod experiment;
pub mod group;
pub mod io;
pub mod landscape1d;
pub mod likelihood;
pub mod mixture;
pub mod moment_match;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use mixture::{
    max_support_distance, moment_tensor, moment_tensors, normalize, snr, DiscreteMixture, NoiseScale, Normalized,
};
pub use tensor::{tensor_inner, SymTensor};
