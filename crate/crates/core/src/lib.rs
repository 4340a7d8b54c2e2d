//! Simulation of analog radio-over-fiber (ARoF) IF-OFDM signals sharing a
//! ROADM channel with a 100G/400G coherent carrier.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`]: the sampled complex waveform type and frequency-domain primitives.
//! * [`ofdm`]: IF-OFDM modem and EVM.
//! * [`coherent`]: DP-QPSK / DP-16QAM generation and Q-factor estimation.
//! * [`optics`]: MZM, fiber, EDFA and photodiode models.
//! * [`filters`]: super-Gaussian ROADM/WSS passbands and demux plans.
//! * [`planner`]: placement of the two ARoF carriers in the unfilled channel spectrum.
//! * [`topology`]: end-to-end scenarios (baseline, A, B, C), sweeps and calibration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherent;
pub mod error;
pub mod filters;
pub mod ofdm;
pub mod optics;
pub mod planner;
pub mod signal;
pub mod topology;
pub mod units;

pub use error::{Error, Result};
pub use signal::{SampledSignal, SpectrumEstimate};
