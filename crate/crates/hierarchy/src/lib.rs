//! Timescale hierarchy of periodic cell networks: escape exponents sorted
//! into levels, clusters of cells merged level by level, and limiting
//! saddle weights. The cluster picture is heuristic.

pub mod dot;
pub mod ladder;
pub mod torus;
pub mod weights;

pub use dot::merge_tree_dot;
pub use ladder::{timescale_ladder, HierarchyReport, LEVEL_TOL};
pub use torus::mirrored_torus;
pub use weights::{cycle_invariant_weights, periodic_alphas};
