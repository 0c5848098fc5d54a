//! Runtime and speed-up model.
//!
//! With `N` intervals, `K` iterations, per-interval solver costs `T_G` and
//! `T_F`, and total emulator cost `T_model`, the worst-case parallel runtime
//! ignoring communication is
//!
//! ```text
//! T_alg = K·T_F + (K + 1)(N − K/2)·T_G + T_model
//! ```
//!
//! against a serial fine cost of `N·T_F`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    /// Seconds per interval for the coarse solver.
    pub t_g: f64,
    /// Seconds per interval for the fine solver.
    pub t_f: f64,
    /// Total seconds spent fitting and evaluating correctors.
    pub t_model: f64,
    /// Measured wallclock of the whole run.
    pub t_alg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupEstimate {
    pub s_alg: f64,
    pub s_star: f64,
}

pub fn theoretical_runtime(n: usize, k: usize, t_g: f64, t_f: f64, t_model: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    k * t_f + (k + 1.0) * (n - k / 2.0) * t_g + t_model
}

/// Upper bound `N/K` reached when solver costs other than `T_F` vanish.
pub fn ideal_speedup(n: usize, k: usize) -> f64 {
    n as f64 / k as f64
}

pub fn speedup(n: usize, k: usize, t_g: f64, t_f: f64, t_model: f64) -> SpeedupEstimate {
    let (nf, kf) = (n as f64, k as f64);
    let denom = kf / nf + (kf + 1.0) * (1.0 - kf / (2.0 * nf)) * (t_g / t_f) + t_model / (nf * t_f);
    SpeedupEstimate {
        s_alg: 1.0 / denom,
        s_star: ideal_speedup(n, k),
    }
}

/// The serial fine runtime an empirical speed-up is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SerialReference {
    Measured { seconds: f64 },
    /// `N` times the mean fine cost per interval; no serial run was made.
    Estimated { intervals: usize, mean_t_f: f64 },
}

impl SerialReference {
    pub fn seconds(&self) -> f64 {
        match *self {
            SerialReference::Measured { seconds } => seconds,
            SerialReference::Estimated {
                intervals,
                mean_t_f,
            } => intervals as f64 * mean_t_f,
        }
    }

    pub fn is_estimate(&self) -> bool {
        matches!(self, SerialReference::Estimated { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpeedup {
    pub value: f64,
    pub estimated: bool,
}

pub fn empirical_speedup(t_alg: f64, serial: SerialReference) -> EmpiricalSpeedup {
    EmpiricalSpeedup {
        value: serial.seconds() / t_alg,
        estimated: serial.is_estimate(),
    }
}
