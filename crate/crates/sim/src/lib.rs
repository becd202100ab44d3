//! Stochastic simulation of noisy saddle passages and escape chains.

pub mod batch;
pub mod chain;
pub mod error;
pub mod rng;
pub mod sde;

pub use chain::{apply_transport, simulate_chain, ChainConfig, ChainOutcome, ChainSimulator, TransportMap};
pub use error::{Result, SimError};
pub use rng::{path_rng, PathRng};
pub use sde::{simulate_exit, ExitRecord, GeneralSde, LinearSaddleSde, Rect, Side, Stepper};
