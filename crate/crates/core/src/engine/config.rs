use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::SubsetStrategy;
use crate::gp::FitOptions;
use crate::integrator::SolverSpec;
use crate::Error;

/// How the correction term `(F − G)(U)` is approximated in the update sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectorKind {
    /// The previous iteration's discrepancy at the same interval.
    Parareal,
    /// Uniform average of the `m` nearest observations.
    MnnUniform { m: usize },
    /// Per-coordinate GPs trained on every observation, refit each iteration.
    GParareal,
    /// Per-coordinate GPs trained on `m` records chosen per query.
    NnGParareal {
        m: usize,
        #[serde(default)]
        strategy: SubsetStrategy,
    },
}

impl CorrectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            CorrectorKind::Parareal => "parareal",
            CorrectorKind::MnnUniform { .. } => "mnn_uniform",
            CorrectorKind::GParareal => "gparareal",
            CorrectorKind::NnGParareal { .. } => "nngparareal",
        }
    }

    pub fn neighbours(&self) -> Option<usize> {
        match *self {
            CorrectorKind::MnnUniform { m } | CorrectorKind::NnGParareal { m, .. } => Some(m),
            _ => None,
        }
    }

    pub fn uses_gp(&self) -> bool {
        matches!(
            self,
            CorrectorKind::GParareal | CorrectorKind::NnGParareal { .. }
        )
    }
}

impl fmt::Display for CorrectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrectorKind::MnnUniform { m } => write!(f, "mnn_uniform(m={m})"),
            CorrectorKind::NnGParareal { m, strategy } => {
                write!(f, "nngparareal(m={m}, {strategy})")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Coordinates in which the iteration runs and the tolerance is tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    /// Physical coordinates.
    None,
    /// Bounding box of the initial coarse trajectory, widened by `margin`
    /// times its extent on each side.
    FromCoarse { margin: f64 },
    Explicit { lo: Vec<f64>, hi: Vec<f64> },
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::FromCoarse { margin: 0.1 }
    }
}

/// What happens when a solve past the converged frontier yields non-finite
/// values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergencePolicy {
    /// Stop the run with [`Error::Diverged`].
    #[default]
    Abort,
    /// Keep the non-finite boundary and let the frontier overwrite it later.
    /// Observations with non-finite data are not stored. Divergence at the
    /// frontier itself still aborts.
    Propagate,
}

pub const DEFAULT_EPSILON: f64 = 5e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PintConfig {
    /// Number of time intervals `N`.
    pub intervals: usize,
    pub coarse: SolverSpec,
    pub fine: SolverSpec,
    pub epsilon: f64,
    pub corrector: CorrectorKind,
    pub gp: FitOptions,
    pub seed: u64,
    pub normalization: Normalization,
    /// Wallclock budget in seconds; the run stops unconverged once exceeded.
    pub max_wallclock: Option<f64>,
    #[serde(default)]
    pub divergence: DivergencePolicy,
}

impl PintConfig {
    pub fn new(intervals: usize, coarse: SolverSpec, fine: SolverSpec, corrector: CorrectorKind) -> Self {
        Self {
            intervals,
            coarse,
            fine,
            epsilon: DEFAULT_EPSILON,
            corrector,
            gp: FitOptions::default(),
            seed: 0,
            normalization: Normalization::default(),
            max_wallclock: None,
            divergence: DivergencePolicy::Abort,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), Error> {
        let bad = |msg: alloc::string::String| Err(Error::Config(msg));
        if self.intervals < 2 {
            return bad(format!("N = {} must be at least 2", self.intervals));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be positive", self.epsilon));
        }
        if self.coarse.steps_per_interval == 0 || self.fine.steps_per_interval == 0 {
            return bad("solver step counts must be at least 1".into());
        }
        if self.corrector.neighbours() == Some(0) {
            return bad("corrector m must be at least 1".into());
        }
        if self.corrector.uses_gp() {
            if self.gp.n_start == 0 {
                return bad("gp.n_start must be at least 1".into());
            }
            if self.gp.nugget_grid.is_empty()
                || self.gp.nugget_grid.iter().any(|&s| !(s >= 0.0 && s.is_finite()))
            {
                return bad("gp.nugget_grid must be a nonempty list of nonnegative values".into());
            }
            let (lo, hi) = self.gp.init_range;
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return bad(format!("gp init range [{lo}, {hi}] is invalid"));
            }
        }
        match &self.normalization {
            Normalization::FromCoarse { margin } if !(*margin >= 0.0 && margin.is_finite()) => {
                bad(format!("normalization margin {margin} must be nonnegative"))
            }
            Normalization::Explicit { lo, hi } if lo.len() != dim || hi.len() != dim => bad(format!(
                "normalization bounds have {} / {} entries, system has dimension {dim}",
                lo.len(),
                hi.len()
            )),
            _ => Ok(()),
        }?;
        if let Some(b) = self.max_wallclock {
            if !(b > 0.0) {
                return bad(format!("wallclock budget {b} must be positive"));
            }
        }
        Ok(())
    }
}
