//! Desk-scale FMCW SAR toolkit: raw-data simulation with TX-RX leakage and
//! oscillator phase noise, per-sweep stationary-point leakage mitigation, a
//! range-Doppler focusing chain, and image-quality metrics for comparing the
//! mitigated pipeline against the conventional one.

pub mod aspc;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod params;
pub mod sar;
pub mod sim;

pub use error::{Error, Result};
pub use params::{RadarParams, ValidatedParams, WindowKind, SPEED_OF_LIGHT};
pub use sim::{DataCube, LeakageModel, PhaseNoiseParams, PointTarget};
