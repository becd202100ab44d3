//! Exponent calculus and single-saddle exit laws for small-noise diffusions
//! near planar heteroclinic networks.

pub mod error;
pub mod exponents;
pub mod kernel;
pub mod network;
pub mod quad;

pub use error::{Error, Result};
