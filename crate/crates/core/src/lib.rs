//! Elliptic and trigonometric anisotropic spin chains built from R-matrices,
//! with residual checks for the identities behind their integrability.

pub mod cli;
pub mod diffop;
pub mod error;
pub mod freeze;
pub mod limits;
pub mod numeric;
pub mod report;
pub mod rmat;
pub mod rng;
pub mod special_fn;
pub mod tensor;

pub use error::{Error, Result};
