//! Single-antenna RSSI positioning from a rotating transmit pattern.
//!
//! A transmitter with a directive, asymmetric antenna pattern rotates
//! through a known schedule while one receiver records RSSI. Because the
//! pattern shape is known, the sequence of RSSI values pins down both the
//! distance and the bearing of the receiver. This crate provides:
//!
//! - [`patterns`]: analytic and tabulated gain patterns with log-slopes,
//! - [`channel`]: the Friis/log-normal shadowing measurement model,
//! - [`solver`]: grid search and polyline intersection primitives,
//! - [`estimators`]: equation solving, curve intersection, maximum
//!   likelihood, and the receiver-gain-free similarity/two-position pipeline,
//! - [`bounds`]: Fisher information, biased Cramér-Rao bounds, distance bias,
//! - [`montecarlo`]: paired-trial sweeps over SNR, rotation count and step,
//! - [`config`]: the flat key-value config format shared with the CLI.

pub mod bounds;
pub mod channel;
pub mod config;
pub mod error;
pub mod estimators;
pub mod montecarlo;
pub mod patterns;
pub mod solver;

pub use bounds::{CrlbReport, Matrix2};
pub use channel::{mean_rssi, sample_measurements, snr_to_sigma, MeasurementSet, Sample, Scenario};
pub use error::{Error, Result};
pub use estimators::{Estimate, Knowns, Method};
pub use montecarlo::{run_sweep, SweepAxis, SweepConfig, SweepResult};
pub use patterns::{AngleDeg, Interpolation, PatternKind, RadiationPattern};
pub use solver::{GridSpec, Polyline};

/// Skew applied to the default transmit pattern.
pub const DEFAULT_SKEW_EPSILON: f64 = 0.5;
/// Phase of the default skew factor, degrees.
pub const DEFAULT_SKEW_DEG: f64 = 30.0;

/// The transmit pattern used unless configured otherwise: a half-wave
/// dipole with a sinusoidal skew, so the bearing is unambiguous.
pub fn default_tx_pattern() -> RadiationPattern {
    RadiationPattern::asymmetric(DEFAULT_SKEW_EPSILON, DEFAULT_SKEW_DEG).expect("valid default skew")
}
