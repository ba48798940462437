//! Parameter sweeps over the driven quantum van der Pol oscillator.
//!
//! A [`ScenarioConfig`] names one or two swept parameters, fixed values for
//! the rest and the observables to record. [`run_scenario`] evaluates the grid
//! in parallel and returns rows in grid order; [`SweepTable::to_csv`] renders
//! them with a `#`-prefixed metadata block. The [`verify`] module runs the
//! acceptance checks against the numerics and closed forms.

pub mod config;
pub mod error;
pub mod presets;
pub mod profile;
pub mod runner;
pub mod verify;

pub use config::{Axis, Output, Param, Scale, ScenarioConfig, SyncReference, ThresholdRule};
pub use error::{Result, SweepError};
pub use presets::{list_presets, preset};
pub use profile::TolerancePolicy;
pub use runner::{run_scenario, RunOptions, SweepRow, SweepTable};
