//! Monte Carlo experiments on escape chains: probability ladders with
//! confidence intervals, power-law fits, escape-time concentration and
//! exit-location laws.

pub mod error;
pub mod estimate;
pub mod fit;
pub mod histogram;
pub mod local;
pub mod stats;
pub mod svg;
pub mod times;

pub use error::{LabError, Result};
pub use estimate::{chain_ladder, estimate_event, ChainSetup, EstimateRow, EstimateTable, LadderConfig, MapChoice};
pub use fit::{fit_power_law, PowerFit};
pub use histogram::{histogram_vs_density, sample_typical_exits, DistanceMetrics};
pub use local::{local_limit_check, LocalLimitRecord, LocalLimitSetup};
pub use times::{exit_time_concentration, summarize_escape_times, ConcentrationSummary};
