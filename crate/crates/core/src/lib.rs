//! Uplink power allocation for cellular-connected UAVs.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] lays out sectored hexagonal sites, drops UAV-UEs and groups cells into clusters.
//! * [`channel`] turns a drop into a per-block gain tensor.
//! * [`baseline`] holds open-loop power control and the proportional-fair scheduler.
//! * [`sca`] evaluates SINR and spectral efficiency and runs the successive
//!   geometric-programming allocators (max-min, max-sum with QoS, single-carrier
//!   bands, time-domain and multi-UE variants).
//! * [`sim`] runs full-buffer and bursty campaigns and writes reports.
//! * [`config`] parses experiment settings and drives a run end to end.

pub mod topology;
pub mod channel;
pub mod baseline;
pub mod sca;
pub mod sim;
pub mod config;

use std::fmt::Display;

/// Converts dBm to watts.
pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts watts to dBm.
pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Converts a linear ratio to dB.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, thiserror::Error)]
pub enum UavError {
    #[error("configuration error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("scheduling error: {0}")]
    Scheduling(String),
    #[error("reporting error: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl UavError {
    pub fn config(key: impl Into<String>, msg: impl Display) -> Self {
        UavError::Config { key: key.into(), msg: msg.to_string() }
    }
}

impl From<posy::GpError> for UavError {
    fn from(e: posy::GpError) -> Self {
        UavError::Solver(e.to_string())
    }
}
