//! Experiment plumbing: configuration, sweeps, fits and standalone checks.

pub mod checks;
pub mod config;
pub mod fit;
pub mod phase;
pub mod sweep;

pub use config::{Experiment, Format, GridPoint, SweepConfig};
pub use fit::{fit_slope, SlopeFit};
pub use phase::{predicted_exponent, Prediction, Regime};
pub use sweep::{run_sweep, RunRecord, SweepReport};
