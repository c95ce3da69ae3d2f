//! Batch experiments over the auction engine: instance families, tournaments
//! with resumable archives, parameter sweeps and reports.

pub mod archive;
pub mod config;
pub mod error;
pub mod instances;
pub mod predict;
pub mod report;
pub mod sweep;
pub mod tournament;

pub use config::{ExperimentConfig, FamilySpec, GridPoint, Profile};
pub use error::{ExperimentError, Result};
pub use predict::{generate, predict};
pub use report::{MetricsRow, Report};
pub use sweep::run_sweep;
pub use tournament::{regenerate, run_tournament, RunSummary};
