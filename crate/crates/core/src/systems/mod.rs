//! Benchmark systems and the affine change of variables onto `[-1, 1]^d`.

mod normalize;
mod ode;
mod pde;

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

pub use normalize::{normalize_system, NormalizationMap, NormalizedRhs};
pub use ode::{
    make_ode_system, Brusselator, DoublePendulum, FitzHughNagumo, Hopf, Lorenz, Rossler,
    ThomasLabyrinth, ODE_SYSTEM_NAMES,
};
pub use pde::{
    discretize_burgers, discretize_fhn2d, discretize_heat, fhn2d_default_t_end, Burgers1d, Fhn2d,
    Fhn2dParams, Heat1d,
};

use crate::integrator::Rhs;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("system `{system}` has no parameter `{param}`")]
    UnknownParameter { system: String, param: String },
    #[error("parameter `{param}` = {value} is out of range: {reason}")]
    InvalidParameter {
        param: String,
        value: f64,
        reason: &'static str,
    },
    #[error("degenerate normalization bounds for coordinate {coord}: [{lo}, {hi}]")]
    DegenerateBounds { coord: usize, lo: f64, hi: f64 },
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// An initial value problem: right-hand side, initial state and time span.
#[derive(Clone)]
pub struct SystemDefinition {
    pub name: String,
    pub rhs: Arc<dyn Rhs>,
    pub initial_condition: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub parameters: Vec<(String, f64)>,
    /// Set when `rhs` acts on normalized coordinates.
    pub normalization: Option<NormalizationMap>,
}

impl SystemDefinition {
    pub fn new(
        name: impl ToString,
        rhs: Arc<dyn Rhs>,
        initial_condition: Vec<f64>,
        span: (f64, f64),
        parameters: Vec<(String, f64)>,
    ) -> Result<Self, SystemError> {
        if initial_condition.len() != rhs.dim() {
            return Err(SystemError::Dimension {
                expected: rhs.dim(),
                got: initial_condition.len(),
            });
        }
        if !(span.1 > span.0) {
            return Err(SystemError::InvalidParameter {
                param: "t_end".into(),
                value: span.1,
                reason: "time span must satisfy t_end > t_start",
            });
        }
        Ok(Self {
            name: name.to_string(),
            rhs,
            initial_condition,
            t_start: span.0,
            t_end: span.1,
            parameters,
            normalization: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.rhs.dim()
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .find(|(k, _)| k == name)
            .map(|&(_, v)| v)
    }

    pub fn with_span(mut self, t_start: f64, t_end: f64) -> Result<Self, SystemError> {
        if !(t_end > t_start) {
            return Err(SystemError::InvalidParameter {
                param: "t_end".into(),
                value: t_end,
                reason: "time span must satisfy t_end > t_start",
            });
        }
        self.t_start = t_start;
        self.t_end = t_end;
        Ok(self)
    }

    pub fn with_initial_condition(mut self, u0: Vec<f64>) -> Result<Self, SystemError> {
        if u0.len() != self.dim() {
            return Err(SystemError::Dimension {
                expected: self.dim(),
                got: u0.len(),
            });
        }
        self.initial_condition = u0;
        Ok(self)
    }
}

impl fmt::Debug for SystemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDefinition")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("span", &(self.t_start, self.t_end))
            .field("parameters", &self.parameters)
            .field("normalized", &self.normalization.is_some())
            .finish()
    }
}

/// Resolves named parameter overrides against a table of defaults.
pub(crate) fn resolve_params<const P: usize>(
    system: &str,
    defaults: [(&'static str, f64); P],
    overrides: &[(&str, f64)],
) -> Result<[f64; P], SystemError> {
    let mut values = defaults.map(|(_, v)| v);
    for &(key, value) in overrides {
        let slot = defaults
            .iter()
            .position(|(k, _)| *k == key)
            .ok_or_else(|| SystemError::UnknownParameter {
                system: system.into(),
                param: key.into(),
            })?;
        if !value.is_finite() {
            return Err(SystemError::InvalidParameter {
                param: key.into(),
                value,
                reason: "must be finite",
            });
        }
        values[slot] = value;
    }
    Ok(values)
}

pub(crate) fn require_positive(param: &str, value: f64) -> Result<(), SystemError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SystemError::InvalidParameter {
            param: param.into(),
            value,
            reason: "must be positive",
        })
    }
}

pub(crate) fn named(defaults: &[&'static str], values: &[f64]) -> Vec<(String, f64)> {
    defaults
        .iter()
        .zip(values)
        .map(|(k, &v)| (String::from(*k), v))
        .collect()
}
