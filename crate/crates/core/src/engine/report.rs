use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::PintConfig;
use crate::gp::FitOutcome;
use crate::perf::{EmpiricalSpeedup, SpeedupEstimate};
use crate::systems::NormalizationMap;

/// Bookkeeping for one iteration `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Converged frontier after this iteration.
    pub frontier: usize,
    /// Coarse-solver seconds in the update sweep.
    pub t_g: f64,
    /// Wallclock of the fine sweep.
    pub t_f: f64,
    /// Seconds spent fitting and evaluating the corrector.
    pub t_model: f64,
    /// Run wallclock at the end of this iteration.
    pub cumulative: f64,
    pub fine_solves: usize,
    pub dataset_size: usize,
    /// Largest training set used by a single prediction.
    pub max_training_size: usize,
    pub fallbacks: usize,
    /// Boundaries holding non-finite values after this iteration.
    pub nonfinite: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackEvent {
    pub iteration: usize,
    pub interval: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub system: String,
    pub parameters: Vec<(String, f64)>,
    pub dim: usize,
    pub config: PintConfig,
    pub converged: bool,
    /// Iterations performed (`K_alg` when converged).
    pub iterations: usize,
    pub frontier_history: Vec<usize>,
    pub per_iteration: Vec<IterationRecord>,
    /// Mean coarse cost per interval, measured on the initial sweep.
    pub t_g_per_interval: f64,
    /// Mean fine cost per interval, measured on the first fine sweep.
    pub t_f_per_interval: f64,
    pub t_model_total: f64,
    pub t_coarse_init: f64,
    /// Wallclock of the whole run, setup included.
    pub t_alg: f64,
    pub speedup: Option<SpeedupEstimate>,
    pub empirical_speedup: Option<EmpiricalSpeedup>,
    pub fallbacks: Vec<FallbackEvent>,
    pub gp_fits: usize,
    /// Hyperparameters chosen by full-data fits, one entry per iteration
    /// and output coordinate.
    pub gp_fit_log: Vec<(usize, usize, FitOutcome)>,
    pub normalization: Option<NormalizationMap>,
    /// Interval boundary times `t_0, …, t_N`.
    pub times: Vec<f64>,
    /// Final boundary states in physical coordinates.
    pub solution: Vec<Vec<f64>>,
}
