//! Operator-weighted backward shifts on `l^p` and `c_0` sums of Banach
//! spaces, segmented tree shifts, and finite-horizon diagnostics for
//! transitivity, mixing, chaos and frequent hypercyclicity.

pub mod error;
pub mod scalar;
pub mod spaces;
pub mod linalg;
pub mod tree;
pub mod graph;
pub mod shift;
pub mod dynamics;
pub mod criteria;
pub mod zoo;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
pub use scalar::Scalar;
