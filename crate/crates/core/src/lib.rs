//! L1-norm scaling cut (L1-SC) supervised dimensionality reduction.
//!
//! The crate contains the robust L1 solver ([`l1sc`]), the L2 reference
//! methods ([`baselines`]), the pairwise dissimilarity matrices they share
//! ([`scatter`]), data handling ([`dataset`]) and the classification
//! protocol used to compare them ([`eval`]).

pub mod dataset;
pub mod baselines;
pub mod error;
pub mod eval;
pub mod l1sc;
pub mod linalg;
pub mod matrix_io;
pub mod projection;
pub mod rng;
pub mod scatter;

pub use error::{Error, Result};
