//! Simulation and detection toolkit for ambient backscatter communication
//! (AmBC) links that use intra-symbol differential amplitude shift keying
//! (IDASK) at the backscatter device.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds scenarios, channels, ambient waveforms and received frames.
//! * [`covariance`] forms sample/theoretical covariances and their spectra.
//! * [`tracy_widom`] provides the order-2 Tracy-Widom CDF and quantile.
//! * [`detectors`] implements the blind second-largest-eigenvalue (SE)
//!   detector, the genie GLRT and two simple baselines.
//! * [`theory`] evaluates closed-form false-alarm, missed-detection and BER
//!   predictions.
//! * [`montecarlo`] runs reproducible, parallel trial campaigns.

pub mod covariance;
pub mod detectors;
mod error;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod theory;
pub mod tracy_widom;

pub use error::{Error, Result};
pub use num_complex::Complex64;
