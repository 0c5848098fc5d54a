//! Scalar Gaussian-process regression with a squared-exponential kernel.
//!
//! Each output coordinate gets its own GP on the shared inputs. The
//! log-likelihood used for hyperparameter selection is
//!
//! ```text
//! ℓ(θ) = −yᵀ (K + σ_reg² I)⁻¹ y − log det(K + σ_reg² I)
//! ```
//!
//! which equals `2 log p(y | θ) + n log 2π`; the additive constant is dropped
//! and the factor 2 is kept.

mod cholesky;
mod nelder_mead;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cholesky::Cholesky;
pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};

use crate::dataset::squared_distance;
use crate::exec::Executor;
use crate::rng::{keyed_rng, stream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error("no training points")]
    Empty,
    #[error("training data has {got} values, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("covariance matrix is not positive definite (nugget {nugget:e})")]
    NotPositiveDefinite { nugget: f64 },
    #[error("no finite likelihood for any of {nuggets} nuggets x {restarts} restarts")]
    NoFiniteLikelihood { nuggets: usize, restarts: usize },
    #[error("non-finite prediction in output coordinate {coord}")]
    NonFinitePrediction { coord: usize },
}

/// Kernel `σ_o² exp(−‖u − v‖² / σ_i²)` plus nugget `σ_reg²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub sigma_i_sq: f64,
    pub sigma_o_sq: f64,
    pub sigma_reg_sq: f64,
}

impl Hyperparams {
    pub fn new(sigma_i_sq: f64, sigma_o_sq: f64, sigma_reg_sq: f64) -> Self {
        Self {
            sigma_i_sq,
            sigma_o_sq,
            sigma_reg_sq,
        }
    }
}

pub const DEFAULT_NUGGET_GRID: [f64; 7] = [1e-20, 1e-16, 1e-13, 1e-10, 1e-8, 1e-6, 1e-4];

pub fn kernel_eval(u: &[f64], v: &[f64], hp: &Hyperparams) -> f64 {
    hp.sigma_o_sq * libm::exp(-squared_distance(u, v) / hp.sigma_i_sq)
}

fn rows(inputs: &[f64], dim: usize) -> Result<usize, GpError> {
    if dim == 0 || inputs.len() % dim != 0 {
        return Err(GpError::Dimension {
            expected: dim,
            got: inputs.len(),
        });
    }
    match inputs.len() / dim {
        0 => Err(GpError::Empty),
        n => Ok(n),
    }
}

/// Pairwise squared distances of the rows of `inputs`, row-major `n × n`.
pub fn squared_distances(inputs: &[f64], dim: usize) -> Vec<f64> {
    let n = inputs.len() / dim;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = squared_distance(&inputs[i * dim..(i + 1) * dim], &inputs[j * dim..(j + 1) * dim]);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// `K(U, U) + σ_reg² I` for the rows of `inputs` (row-major `n × dim`).
pub fn gram_matrix(inputs: &[f64], dim: usize, hp: &Hyperparams) -> Result<Vec<f64>, GpError> {
    let n = rows(inputs, dim)?;
    let mut k = squared_distances(inputs, dim);
    fill_gram(&mut k, n, hp, true);
    Ok(k)
}

/// Overwrites squared distances with kernel values plus nugget.
fn fill_gram(k: &mut [f64], n: usize, hp: &Hyperparams, full: bool) {
    let scale = -1.0 / hp.sigma_i_sq;
    for i in 0..n {
        let upto = if full { n } else { i + 1 };
        for j in 0..upto {
            let v = hp.sigma_o_sq * libm::exp(k[i * n + j] * scale);
            k[i * n + j] = if i == j { v + hp.sigma_reg_sq } else { v };
        }
    }
}

/// Likelihood from precomputed squared distances. `work` must have length
/// `n² + n`. Returns `None` when the factorization fails.
fn likelihood_from_distances(
    dist: &[f64],
    y: &[f64],
    hp: &Hyperparams,
    work: &mut [f64],
) -> Option<f64> {
    let n = y.len();
    let (k, z) = work.split_at_mut(n * n);
    let scale = -1.0 / hp.sigma_i_sq;
    for i in 0..n {
        for j in 0..i {
            k[i * n + j] = hp.sigma_o_sq * libm::exp(dist[i * n + j] * scale);
        }
        k[i * n + i] = hp.sigma_o_sq + hp.sigma_reg_sq;
    }
    if !cholesky::factor_in_place(k, n) {
        return None;
    }
    z.copy_from_slice(y);
    cholesky::forward_in_place(k, n, z);
    let quad: f64 = z.iter().map(|x| x * x).sum();
    let log_det: f64 = 2.0 * (0..n).map(|i| libm::log(k[i * n + i])).sum::<f64>();
    let v = -quad - log_det;
    v.is_finite().then_some(v)
}

pub fn log_marginal_likelihood(
    inputs: &[f64],
    dim: usize,
    y: &[f64],
    hp: &Hyperparams,
) -> Result<f64, GpError> {
    let n = rows(inputs, dim)?;
    if y.len() != n {
        return Err(GpError::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let dist = squared_distances(inputs, dim);
    let mut work = vec![0.0; n * n + n];
    likelihood_from_distances(&dist, y, hp, &mut work).ok_or(GpError::NotPositiveDefinite {
        nugget: hp.sigma_reg_sq,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub n_start: usize,
    pub nugget_grid: Vec<f64>,
    pub nelder_mead: NelderMeadOptions,
    /// Initial log-scales are drawn uniformly from this range.
    pub init_range: (f64, f64),
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_start: 10,
            nugget_grid: DEFAULT_NUGGET_GRID.to_vec(),
            nelder_mead: NelderMeadOptions::default(),
            init_range: (-5.0, 5.0),
        }
    }
}

/// The selected hyperparameters and bookkeeping about the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub hyperparams: Hyperparams,
    pub log_likelihood: f64,
    pub nugget_index: usize,
    pub restart: usize,
    /// Restarts (over all nuggets) that ended at a finite likelihood.
    pub finite_restarts: usize,
    pub evaluations: usize,
}

/// Where one Nelder–Mead restart ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartResult {
    pub nugget_index: usize,
    pub restart: usize,
    pub hyperparams: Hyperparams,
    /// `f64::NEG_INFINITY` when the restart never found a finite value.
    pub log_likelihood: f64,
    pub evaluations: usize,
}

/// Maximizes the log-likelihood over `(ln σ_i², ln σ_o²)` for each nugget
/// in the grid, from `n_start` random starts each. Candidates are compared
/// in `(nugget index, restart index)` order and the first maximum wins, so
/// the result does not depend on how `exec` schedules the restarts.
pub fn fit_hyperparams<E: Executor + ?Sized>(
    inputs: &[f64],
    dim: usize,
    y: &[f64],
    opts: &FitOptions,
    seed: u64,
    exec: &E,
) -> Result<FitOutcome, GpError> {
    let n = rows(inputs, dim)?;
    if y.len() != n {
        return Err(GpError::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let dist = squared_distances(inputs, dim);
    fit_from_distances(&dist, y, opts, seed, exec).0
}

/// Like [`fit_hyperparams`], also returning every restart's end point.
pub fn fit_hyperparams_with_trace<E: Executor + ?Sized>(
    inputs: &[f64],
    dim: usize,
    y: &[f64],
    opts: &FitOptions,
    seed: u64,
    exec: &E,
) -> Result<(FitOutcome, Vec<RestartResult>), GpError> {
    let n = rows(inputs, dim)?;
    if y.len() != n {
        return Err(GpError::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let dist = squared_distances(inputs, dim);
    let (best, trace) = fit_from_distances(&dist, y, opts, seed, exec);
    Ok((best?, trace))
}

fn fit_from_distances<E: Executor + ?Sized>(
    dist: &[f64],
    y: &[f64],
    opts: &FitOptions,
    seed: u64,
    exec: &E,
) -> (Result<FitOutcome, GpError>, Vec<RestartResult>) {
    let n = y.len();
    let jobs = opts.nugget_grid.len() * opts.n_start;
    let (lo, hi) = opts.init_range;
    let results: Vec<RestartResult> = exec.map(jobs, |job| {
        let (g, r) = (job / opts.n_start, job % opts.n_start);
        let nugget = opts.nugget_grid[g];
        let mut rng = keyed_rng(seed, &[stream::GP_RESTART, g as u64, r as u64]);
        let x0 = [rng.random_range(lo..=hi), rng.random_range(lo..=hi)];
        let mut work = vec![0.0; n * n + n];
        let m = minimize(
            |x| {
                let hp = Hyperparams::new(libm::exp(x[0]), libm::exp(x[1]), nugget);
                match likelihood_from_distances(dist, y, &hp, &mut work) {
                    Some(v) => -v,
                    None => f64::INFINITY,
                }
            },
            &x0,
            &opts.nelder_mead,
        );
        RestartResult {
            nugget_index: g,
            restart: r,
            hyperparams: Hyperparams::new(libm::exp(m.x[0]), libm::exp(m.x[1]), nugget),
            log_likelihood: if m.f.is_finite() { -m.f } else { f64::NEG_INFINITY },
            evaluations: m.evaluations,
        }
    });
    let mut best: Option<&RestartResult> = None;
    let mut finite = 0;
    for res in &results {
        if !res.log_likelihood.is_finite() {
            continue;
        }
        finite += 1;
        if best.is_none_or(|b| res.log_likelihood > b.log_likelihood) {
            best = Some(res);
        }
    }
    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let outcome = best
        .map(|b| FitOutcome {
            hyperparams: b.hyperparams,
            log_likelihood: b.log_likelihood,
            nugget_index: b.nugget_index,
            restart: b.restart,
            finite_restarts: finite,
            evaluations,
        })
        .ok_or(GpError::NoFiniteLikelihood {
            nuggets: opts.nugget_grid.len(),
            restarts: opts.n_start,
        });
    (outcome, results)
}

/// A conditioned scalar GP.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGp {
    pub hyperparams: Hyperparams,
    chol: Cholesky,
    alpha: Vec<f64>,
}

/// Per-coordinate GPs sharing one training input matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GpFit {
    dim: usize,
    inputs: Vec<f64>,
    coords: Vec<ScalarGp>,
}

impl GpFit {
    /// Conditions one GP per output coordinate with fixed hyperparameters.
    /// `outputs` is row-major `n × hps.len()`.
    pub fn with_hyperparams(
        inputs: &[f64],
        dim: usize,
        outputs: &[f64],
        hps: &[Hyperparams],
    ) -> Result<Self, GpError> {
        let n = rows(inputs, dim)?;
        let out_dim = hps.len();
        if outputs.len() != n * out_dim {
            return Err(GpError::Dimension {
                expected: n * out_dim,
                got: outputs.len(),
            });
        }
        let dist = squared_distances(inputs, dim);
        let coords = hps
            .iter()
            .enumerate()
            .map(|(c, hp)| {
                let y: Vec<f64> = (0..n).map(|i| outputs[i * out_dim + c]).collect();
                ScalarGp::condition(&dist, n, &y, *hp)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            dim,
            inputs: inputs.to_vec(),
            coords,
        })
    }

    /// Selects hyperparameters per output coordinate, then conditions.
    pub fn fit<E: Executor + ?Sized>(
        inputs: &[f64],
        dim: usize,
        outputs: &[f64],
        out_dim: usize,
        opts: &FitOptions,
        seed: u64,
        exec: &E,
    ) -> Result<(Self, Vec<FitOutcome>), GpError> {
        let n = rows(inputs, dim)?;
        if outputs.len() != n * out_dim {
            return Err(GpError::Dimension {
                expected: n * out_dim,
                got: outputs.len(),
            });
        }
        let dist = squared_distances(inputs, dim);
        let mut coords = Vec::with_capacity(out_dim);
        let mut outcomes = Vec::with_capacity(out_dim);
        for c in 0..out_dim {
            let y: Vec<f64> = (0..n).map(|i| outputs[i * out_dim + c]).collect();
            let seed_c = crate::rng::derive_key(seed, &[c as u64]);
            let outcome = fit_from_distances(&dist, &y, opts, seed_c, exec).0?;
            coords.push(ScalarGp::condition(&dist, n, &y, outcome.hyperparams)?);
            outcomes.push(outcome);
        }
        Ok((
            Self {
                dim,
                inputs: inputs.to_vec(),
                coords,
            },
            outcomes,
        ))
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn output_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinate(&self, c: usize) -> &ScalarGp {
        &self.coords[c]
    }

    fn cross(&self, hp: &Hyperparams, query: &[f64]) -> Vec<f64> {
        self.inputs
            .chunks_exact(self.dim)
            .map(|row| kernel_eval(row, query, hp))
            .collect()
    }

    pub fn posterior_mean(&self, coord: usize, query: &[f64]) -> f64 {
        let gp = &self.coords[coord];
        self.cross(&gp.hyperparams, query)
            .iter()
            .zip(&gp.alpha)
            .map(|(k, a)| k * a)
            .sum()
    }

    /// Posterior variance, clamped at zero. Values below `-1e-10` indicate
    /// a badly conditioned factorization and are still clamped.
    pub fn posterior_variance(&self, coord: usize, query: &[f64]) -> f64 {
        let gp = &self.coords[coord];
        let mut v = self.cross(&gp.hyperparams, query);
        gp.chol.forward(&mut v);
        let prior = gp.hyperparams.sigma_o_sq;
        let var = prior - v.iter().map(|x| x * x).sum::<f64>();
        var.max(0.0)
    }

    /// Posterior means of all output coordinates.
    pub fn predict(&self, query: &[f64]) -> Result<Vec<f64>, GpError> {
        (0..self.coords.len())
            .map(|c| {
                let m = self.posterior_mean(c, query);
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(GpError::NonFinitePrediction { coord: c })
                }
            })
            .collect()
    }
}

impl ScalarGp {
    fn condition(dist: &[f64], n: usize, y: &[f64], hp: Hyperparams) -> Result<Self, GpError> {
        let mut k = dist.to_vec();
        fill_gram(&mut k, n, &hp, false);
        let chol = Cholesky::new(k, n).ok_or(GpError::NotPositiveDefinite {
            nugget: hp.sigma_reg_sq,
        })?;
        let mut alpha = y.to_vec();
        chol.solve(&mut alpha);
        Ok(Self {
            hyperparams: hp,
            chol,
            alpha,
        })
    }
}

/// Prior variance when there is nothing to condition on.
pub fn prior_variance(hp: &Hyperparams) -> f64 {
    hp.sigma_o_sq
}

/// Fits per-coordinate GPs on a training subset and returns the posterior
/// mean at `query`. `outputs` is row-major `n × out_dim`.
pub fn predict_correction<E: Executor + ?Sized>(
    inputs: &[f64],
    dim: usize,
    outputs: &[f64],
    out_dim: usize,
    query: &[f64],
    opts: &FitOptions,
    seed: u64,
    exec: &E,
) -> Result<(Vec<f64>, Vec<FitOutcome>), GpError> {
    let (fit, outcomes) = GpFit::fit(inputs, dim, outputs, out_dim, opts, seed, exec)?;
    Ok((fit.predict(query)?, outcomes))
}
