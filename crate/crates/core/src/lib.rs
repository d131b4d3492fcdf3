//! Impulse-radio simulation at millimeter-wave and low-terahertz bands.
//!
//! Derivative-of-Gaussian pulses travel through a molecular-absorption
//! channel to a uniform linear array. The receiver estimates the angle of
//! arrival with incoherent MUSIC and the pulse center frequency from the
//! spectral centroid of the recovered p.s.d.

// `!(x > 0.0)` is used on purpose so that NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arraysim;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod noise;
pub mod pulsebank;

pub use arraysim::{ArrayConfig, FrequencyGrid, Medium, SnapshotSet};
pub use channel::{AbsorptionTable, ChannelParams};
pub use error::{Error, Result};
pub use estimator::EstimationOutcome;
pub use noise::NoiseParams;
pub use pulsebank::{PulseBank, PulseSpec};
