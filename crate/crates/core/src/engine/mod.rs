//! The Parareal driver.
//!
//! Boundaries are `U_0, …, U_N`, and interval `i` runs from `t_i` to
//! `t_{i+1}`. The frontier `L` counts boundaries past `U_0` that are final:
//! `U_0..=U_L` never change again, and the run has converged when `L = N`.
//!
//! Iteration `k` propagates every unconverged boundary `U_{k−1,i}`,
//! `i = L..N`, with the fine solver, records `(U, (F − G)(U))` in the store,
//! and then sweeps `i = L+1..=N` sequentially:
//!
//! ```text
//! U_{k,i} = G(U_{k,i−1}) + f̂(U_{k,i−1})
//! ```
//!
//! At `i = L+1` the input `U_{k,L} = U_{k−1,L}` was just propagated exactly,
//! so every corrector uses the stored discrepancy there and `U_{k,L+1}` is the
//! fine solution. The frontier then moves to `L+1` and on through every
//! following boundary whose change since the previous iteration is below the
//! tolerance in the max norm.

mod config;
mod report;

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

pub use config::{CorrectorKind, DivergencePolicy, Normalization, PintConfig, DEFAULT_EPSILON};
pub use report::{FallbackEvent, IterationRecord, RunReport};

use crate::dataset::{select_subset, CorrectionRecord, CorrectionStore, QueryTag};
use crate::exec::{Clock, Executor};
use crate::gp::{GpFit, FitOutcome};
use crate::integrator::{integrate_interval, SolverSpec};
use crate::perf::{empirical_speedup, speedup, SerialReference};
use crate::rng::derive_key;
use crate::systems::{normalize_system, NormalizationMap, SystemDefinition};
use crate::{Error, Result};

/// Everything the iteration carries from one step to the next.
#[derive(Debug, Clone)]
pub struct IterationState {
    /// `u[k][i]`: boundary `i` after iteration `k`.
    pub u: Vec<Vec<Vec<f64>>>,
    pub frontier: usize,
    /// Frontier after each iteration, starting with the initial 0.
    pub frontier_history: Vec<usize>,
    pub store: CorrectionStore,
    /// `G(U_{k,i})` for the latest iteration `k`, where computed.
    coarse: Vec<Option<Vec<f64>>>,
    /// `(F − G)(U_{k−1,i})` from the latest fine sweep, where computed.
    corrections: Vec<Option<Vec<f64>>>,
}

impl IterationState {
    pub fn iteration(&self) -> usize {
        self.u.len() - 1
    }

    pub fn latest(&self) -> &[Vec<f64>] {
        self.u.last().expect("state holds the initial sweep")
    }

    pub fn converged(&self) -> bool {
        self.frontier + 1 == self.u[0].len()
    }
}

/// Results of one fine sweep.
#[derive(Debug, Clone)]
pub struct FineSweep {
    pub iteration: usize,
    pub records: Vec<CorrectionRecord>,
    /// Intervals whose fine solve or discrepancy was non-finite.
    pub skipped: Vec<usize>,
    /// Per-interval fine solver seconds.
    pub durations: Vec<f64>,
    pub wallclock: f64,
}

/// Timings and events of one update sweep.
#[derive(Debug, Clone, Default)]
pub struct UpdateStats {
    pub t_g: f64,
    pub t_model: f64,
    pub max_training_size: usize,
    pub fallbacks: Vec<FallbackEvent>,
    pub gp_fits: usize,
    pub fit_log: Vec<(usize, usize, FitOutcome)>,
    /// Set when the wallclock budget ran out mid-sweep.
    pub interrupted: bool,
}

/// A correction source that may be compared against the true discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predictor {
    Corrector(CorrectorKind),
    /// The exact `(F − G)(U)`.
    Oracle,
}

/// A configured Parareal run over one system.
pub struct Pint<'a, E: Executor, C: Clock> {
    physical: SystemDefinition,
    system: SystemDefinition,
    config: PintConfig,
    times: Vec<f64>,
    exec: &'a E,
    clock: &'a C,
    start: f64,
    t_setup: f64,
}

fn solve(
    spec: &SolverSpec,
    sys: &SystemDefinition,
    u: &[f64],
    t0: f64,
    t1: f64,
    phase: &'static str,
    iteration: usize,
    interval: usize,
) -> Result<Vec<f64>> {
    integrate_interval(spec, sys.rhs.as_ref(), u, t0, t1).map_err(|e| match e {
        crate::integrator::IntegratorError::Diverged { .. } => Error::Diverged {
            phase,
            iteration,
            interval,
        },
        other => other.into(),
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn nan_vec(d: usize) -> Vec<f64> {
    vec![f64::NAN; d]
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |m, d| if d > m || d.is_nan() { d } else { m })
}

impl<'a, E: Executor, C: Clock> Pint<'a, E, C> {
    /// Validates the configuration and resolves the working coordinates.
    /// With [`Normalization::FromCoarse`] this runs one coarse sweep in
    /// physical coordinates to find the bounds.
    pub fn new(system: &SystemDefinition, config: PintConfig, exec: &'a E, clock: &'a C) -> Result<Self> {
        config.validate(system.dim())?;
        let start = clock.now();
        let n = config.intervals;
        let (t0, t1) = (system.t_start, system.t_end);
        let times: Vec<f64> = (0..=n)
            .map(|i| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 })
            .collect();
        let map = match &config.normalization {
            Normalization::None => None,
            Normalization::Explicit { lo, hi } => Some(NormalizationMap::new(lo.clone(), hi.clone())?),
            Normalization::FromCoarse { margin } => {
                let mut pts = vec![system.initial_condition.clone()];
                for i in 0..n {
                    let next = solve(&config.coarse, system, &pts[i], times[i], times[i + 1], "coarse", 0, i)?;
                    pts.push(next);
                }
                Some(NormalizationMap::from_samples_with_margin(
                    pts.iter().map(|p| p.as_slice()),
                    *margin,
                )?)
            }
        };
        let working = match map {
            Some(m) => normalize_system(system, m)?,
            None => system.clone(),
        };
        let t_setup = clock.now() - start;
        Ok(Self {
            physical: system.clone(),
            system: working,
            config,
            times,
            exec,
            clock,
            start,
            t_setup,
        })
    }

    pub fn config(&self) -> &PintConfig {
        &self.config
    }

    /// The system in the coordinates the iteration runs in.
    pub fn working_system(&self) -> &SystemDefinition {
        &self.system
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn n(&self) -> usize {
        self.config.intervals
    }

    fn coarse(&self, u: &[f64], iteration: usize, i: usize) -> Result<Vec<f64>> {
        solve(&self.config.coarse, &self.system, u, self.times[i], self.times[i + 1], "coarse", iteration, i)
    }

    fn fine(&self, u: &[f64], iteration: usize, i: usize) -> Result<Vec<f64>> {
        solve(&self.config.fine, &self.system, u, self.times[i], self.times[i + 1], "fine", iteration, i)
    }

    fn propagate(&self) -> bool {
        self.config.divergence == DivergencePolicy::Propagate
    }

    fn over_budget(&self) -> bool {
        self.config
            .max_wallclock
            .is_some_and(|b| self.clock.now() - self.start > b)
    }

    /// `U_{0,0} = u_0` and `U_{0,i} = G(U_{0,i−1})`. Returns the state and
    /// the per-interval coarse durations.
    pub fn coarse_init(&self) -> Result<(IterationState, Vec<f64>)> {
        let n = self.n();
        let mut row = Vec::with_capacity(n + 1);
        row.push(self.system.initial_condition.clone());
        let mut coarse = vec![None; n + 1];
        let mut durations = Vec::with_capacity(n);
        for i in 0..n {
            let t = self.clock.now();
            let g = self.coarse(&row[i], 0, i)?;
            durations.push(self.clock.now() - t);
            coarse[i] = Some(g.clone());
            row.push(g);
        }
        Ok((
            IterationState {
                u: vec![row],
                frontier: 0,
                frontier_history: vec![0],
                store: CorrectionStore::new(self.system.dim()),
                coarse,
                corrections: vec![None; n + 1],
            },
            durations,
        ))
    }

    /// Fine propagation of every unconverged boundary of the latest
    /// iteration, in parallel.
    pub fn fine_sweep(&self, state: &IterationState) -> Result<FineSweep> {
        let prev = state.iteration();
        let lo = state.frontier;
        let n = self.n();
        let row = state.latest();
        let t = self.clock.now();
        let results = self.exec.map(n - lo, |j| {
            let i = lo + j;
            let t = self.clock.now();
            let f = self.fine(&row[i], prev + 1, i);
            (f, self.clock.now() - t)
        });
        let wallclock = self.clock.now() - t;
        let mut records = Vec::with_capacity(n - lo);
        let mut skipped = Vec::new();
        let mut durations = Vec::with_capacity(n - lo);
        for (j, (f, dt)) in results.into_iter().enumerate() {
            let i = lo + j;
            durations.push(dt);
            let f = match f {
                Err(Error::Diverged { .. }) if i > lo && self.propagate() => {
                    skipped.push(i);
                    continue;
                }
                f => f?,
            };
            let g = state.coarse[i].as_ref().expect("coarse value of unconverged boundary");
            let output = sub(&f, g);
            if !(finite(&output) && finite(&row[i])) {
                if i > lo && self.propagate() {
                    skipped.push(i);
                    continue;
                }
                return Err(Error::Diverged {
                    phase: "fine",
                    iteration: prev + 1,
                    interval: i,
                });
            }
            records.push(CorrectionRecord {
                input: row[i].clone(),
                output,
                interval: i,
                iteration: prev,
            });
        }
        Ok(FineSweep {
            iteration: prev + 1,
            records,
            skipped,
            durations,
            wallclock,
        })
    }

    /// Adds the sweep's observations to the store and keeps their outputs
    /// for the Parareal lookup.
    pub fn absorb(&self, state: &mut IterationState, sweep: &FineSweep) -> Result<()> {
        state.corrections.iter_mut().for_each(|c| *c = None);
        for r in &sweep.records {
            state.corrections[r.interval] = Some(r.output.clone());
        }
        for &i in &sweep.skipped {
            state.corrections[i] = Some(nan_vec(self.system.dim()));
        }
        state.store.insert_batch(sweep.records.clone())?;
        Ok(())
    }

    fn fit_seed(&self, k: usize, i: usize) -> u64 {
        derive_key(self.config.seed, &[crate::rng::stream::RUN, k as u64, i as u64])
    }

    /// Computes `U_{k,·}` for `k = iteration() + 1` after
    /// [`Self::absorb`] has run for that iteration.
    pub fn update_sweep(&self, state: &mut IterationState) -> Result<UpdateStats> {
        let k = state.iteration() + 1;
        let n = self.n();
        let lo = state.frontier;
        let d = self.system.dim();
        let mut stats = UpdateStats::default();
        let prev = state.latest().to_vec();
        let mut row: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        row.extend(prev[..=lo].iter().cloned());
        let mut coarse = vec![None; n + 1];
        coarse[lo] = state.coarse[lo].clone();

        let gp_fit = if self.config.corrector == CorrectorKind::GParareal {
            let t = self.clock.now();
            let store = &state.store;
            let outputs: Vec<f64> = store.records().iter().flat_map(|r| r.output.iter().copied()).collect();
            let fit = GpFit::fit(store.inputs(), d, &outputs, d, &self.config.gp, self.fit_seed(k, 0), self.exec);
            stats.t_model += self.clock.now() - t;
            stats.gp_fits += 1;
            stats.max_training_size = store.len();
            match fit {
                Ok((fit, outcomes)) => {
                    stats.fit_log.extend(outcomes.into_iter().enumerate().map(|(c, o)| (k, c, o)));
                    Some(fit)
                }
                Err(e) => {
                    stats.fallbacks.push(FallbackEvent {
                        iteration: k,
                        interval: lo + 1,
                        reason: format!("full-data fit failed: {e}"),
                    });
                    None
                }
            }
        } else {
            None
        };

        for i in lo + 1..=n {
            if i > lo + 1 && self.over_budget() {
                stats.interrupted = true;
                break;
            }
            let x = row[i - 1].clone();
            let g = match &coarse[i - 1] {
                Some(g) => g.clone(),
                None => {
                    let t = self.clock.now();
                    let g = match self.coarse(&x, k, i - 1) {
                        Err(Error::Diverged { .. }) if self.propagate() => nan_vec(d),
                        g => g?,
                    };
                    stats.t_g += self.clock.now() - t;
                    g
                }
            };
            let lookup = || {
                state.corrections[i - 1]
                    .clone()
                    .expect("fine sweep covered this interval")
            };
            let correction = if i == lo + 1 {
                lookup()
            } else if !finite(&x) {
                nan_vec(d)
            } else {
                let t = self.clock.now();
                let c = self.predict(state, gp_fit.as_ref(), &x, k, i - 1, &mut stats);
                stats.t_model += self.clock.now() - t;
                c.unwrap_or_else(|reason| {
                    stats.fallbacks.push(FallbackEvent {
                        iteration: k,
                        interval: i - 1,
                        reason,
                    });
                    lookup()
                })
            };
            let next = add(&g, &correction);
            if !finite(&next) && (i == lo + 1 || !self.propagate()) {
                return Err(Error::Diverged {
                    phase: "update",
                    iteration: k,
                    interval: i - 1,
                });
            }
            coarse[i - 1] = Some(g);
            row.push(next);
        }
        if stats.interrupted {
            return Ok(stats);
        }
        state.u.push(row);
        state.coarse = coarse;
        Ok(stats)
    }

    /// `f̂(x)` for the query at boundary `interval` in iteration `k`. Errors
    /// carry the reason for falling back to the lookup.
    fn predict(
        &self,
        state: &IterationState,
        gp_fit: Option<&GpFit>,
        x: &[f64],
        k: usize,
        interval: usize,
        stats: &mut UpdateStats,
    ) -> core::result::Result<Vec<f64>, alloc::string::String> {
        let d = self.system.dim();
        let store = &state.store;
        let tag = QueryTag::new(self.config.seed, k, interval, 0);
        match self.config.corrector {
            CorrectorKind::Parareal => Ok(state.corrections[interval]
                .clone()
                .expect("fine sweep covered this interval")),
            CorrectorKind::MnnUniform { m } => {
                let nn = store.query_m_nearest(x, m, &tag).map_err(|e| e.to_string())?;
                stats.max_training_size = stats.max_training_size.max(nn.len());
                let mut acc = vec![0.0; d];
                for c in &nn {
                    for (a, o) in acc.iter_mut().zip(&store.records()[c.index].output) {
                        *a += o;
                    }
                }
                let w = 1.0 / nn.len() as f64;
                Ok(acc.into_iter().map(|a| a * w).collect())
            }
            CorrectorKind::GParareal => match gp_fit {
                Some(fit) => fit.predict(x).map_err(|e| e.to_string()),
                None => Err("no full-data fit this iteration".into()),
            },
            CorrectorKind::NnGParareal { m, strategy } => {
                let idx = select_subset(store, strategy, x, interval, k, m, &tag).map_err(|e| e.to_string())?;
                stats.max_training_size = stats.max_training_size.max(idx.len());
                let mut inputs = Vec::with_capacity(idx.len() * d);
                let mut outputs = Vec::with_capacity(idx.len() * d);
                for &j in &idx {
                    let r = &store.records()[j];
                    inputs.extend_from_slice(&r.input);
                    outputs.extend_from_slice(&r.output);
                }
                stats.gp_fits += 1;
                let (fit, _) = GpFit::fit(&inputs, d, &outputs, d, &self.config.gp, self.fit_seed(k, interval + 1), self.exec)
                    .map_err(|e| e.to_string())?;
                fit.predict(x).map_err(|e| e.to_string())
            }
        }
    }

    /// Moves the frontier past the boundary fixed exactly in this iteration
    /// and then across every following boundary that changed by less than
    /// the tolerance.
    pub fn check_convergence(&self, state: &mut IterationState) -> usize {
        let k = state.iteration();
        let n = self.n();
        let mut l = (state.frontier + 1).min(n);
        while l < n && max_abs_diff(&state.u[k][l + 1], &state.u[k - 1][l + 1]) < self.config.epsilon {
            l += 1;
        }
        state.frontier = l;
        state.frontier_history.push(l);
        l
    }

    /// The run from coarse initialization to convergence, budget exhaustion
    /// or `K = N`.
    pub fn run(&self) -> Result<RunReport> {
        self.run_with_state().map(|(r, _)| r)
    }

    /// [`Self::run`], also returning the final iteration state.
    pub fn run_with_state(&self) -> Result<(RunReport, IterationState)> {
        let t = self.clock.now();
        let (mut state, g_durations) = self.coarse_init()?;
        let t_coarse_init = self.clock.now() - t;
        let t_g_per_interval = g_durations.iter().sum::<f64>() / g_durations.len() as f64;
        let mut per_iteration = Vec::new();
        let mut fallbacks = Vec::new();
        let mut fit_log = Vec::new();
        let mut gp_fits = 0;
        let mut t_f_per_interval = 0.0;
        let mut converged = false;
        while !state.converged() {
            if self.over_budget() {
                break;
            }
            let sweep = self.fine_sweep(&state)?;
            if sweep.iteration == 1 {
                t_f_per_interval = sweep.durations.iter().sum::<f64>() / sweep.durations.len() as f64;
            }
            self.absorb(&mut state, &sweep)?;
            let stats = self.update_sweep(&mut state)?;
            fallbacks.extend(stats.fallbacks.iter().cloned());
            fit_log.extend(stats.fit_log.iter().cloned());
            gp_fits += stats.gp_fits;
            if stats.interrupted {
                break;
            }
            let frontier = self.check_convergence(&mut state);
            per_iteration.push(IterationRecord {
                k: sweep.iteration,
                frontier,
                t_g: stats.t_g,
                t_f: sweep.wallclock,
                t_model: stats.t_model,
                cumulative: self.clock.now() - self.start,
                fine_solves: sweep.records.len(),
                dataset_size: state.store.len(),
                max_training_size: stats.max_training_size,
                fallbacks: stats.fallbacks.len(),
                nonfinite: state.latest().iter().filter(|u| !finite(u)).count(),
            });
            converged = state.converged();
        }
        let t_alg = self.clock.now() - self.start;
        let n = self.n();
        let k = state.iteration();
        let t_model_total = per_iteration.iter().map(|r| r.t_model).sum();
        let timed = t_f_per_interval > 0.0;
        let solution = state
            .latest()
            .iter()
            .map(|u| match &self.system.normalization {
                Some(m) => m.to_physical(u),
                None => u.clone(),
            })
            .collect();
        let report = RunReport {
            system: self.physical.name.clone(),
            parameters: self.physical.parameters.clone(),
            dim: self.physical.dim(),
            config: self.config.clone(),
            converged,
            iterations: k,
            frontier_history: state.frontier_history.clone(),
            per_iteration,
            t_g_per_interval,
            t_f_per_interval,
            t_model_total,
            t_coarse_init: t_coarse_init + self.t_setup,
            t_alg,
            speedup: (timed && k > 0).then(|| speedup(n, k, t_g_per_interval, t_f_per_interval, t_model_total)),
            empirical_speedup: (timed && t_alg > 0.0).then(|| {
                empirical_speedup(
                    t_alg,
                    SerialReference::Estimated {
                        intervals: n,
                        mean_t_f: t_f_per_interval,
                    },
                )
            }),
            fallbacks,
            gp_fits,
            gp_fit_log: fit_log,
            normalization: self.system.normalization.clone(),
            times: self.times.clone(),
            solution,
        };
        Ok((report, state))
    }

    /// The serial fine trajectory at every boundary, in working coordinates.
    pub fn serial_fine(&self) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![self.system.initial_condition.clone()];
        for i in 0..self.n() {
            let next = self.fine(&out[i], 0, i)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Prediction error `‖(F − G)(U_{k,i}) − f̂(U_{k,i})‖₂` for every
    /// unconverged boundary `i` of the state's latest iteration, using the
    /// observations currently in the store.
    pub fn prediction_error_profile(&self, state: &IterationState, predictor: Predictor) -> Result<Vec<(usize, f64)>> {
        let k = state.iteration();
        let row = state.latest();
        let lo = state.frontier;
        let n = self.n();
        let truth = self.exec.map(n - lo, |j| {
            let i = lo + j;
            let f = self.fine(&row[i], k, i)?;
            let g = self.coarse(&row[i], k, i)?;
            Ok::<_, Error>(sub(&f, &g))
        });
        let mut out = Vec::with_capacity(n - lo);
        let mut stats = UpdateStats::default();
        let gp_fit = match predictor {
            Predictor::Corrector(CorrectorKind::GParareal) => {
                let d = self.system.dim();
                let store = &state.store;
                let outputs: Vec<f64> = store.records().iter().flat_map(|r| r.output.iter().copied()).collect();
                GpFit::fit(store.inputs(), d, &outputs, d, &self.config.gp, self.fit_seed(k, 0), self.exec)
                    .ok()
                    .map(|(f, _)| f)
            }
            _ => None,
        };
        let lookup = |i: usize| {
            state
                .store
                .records()
                .iter()
                .rev()
                .find(|r| r.interval == i)
                .map(|r| r.output.clone())
        };
        for (j, truth) in truth.into_iter().enumerate() {
            let i = lo + j;
            let truth = truth?;
            let pred = match predictor {
                Predictor::Oracle => Some(truth.clone()),
                Predictor::Corrector(CorrectorKind::Parareal) => lookup(i),
                Predictor::Corrector(kind) => {
                    let engine = Pint {
                        config: PintConfig {
                            corrector: kind,
                            ..self.config.clone()
                        },
                        physical: self.physical.clone(),
                        system: self.system.clone(),
                        times: self.times.clone(),
                        exec: self.exec,
                        clock: self.clock,
                        start: self.start,
                        t_setup: 0.0,
                    };
                    engine.predict(state, gp_fit.as_ref(), &row[i], k, i, &mut stats).ok()
                }
            };
            let err = match pred {
                Some(p) => libm::sqrt(p.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum()),
                None => f64::NAN,
            };
            out.push((i, err));
        }
        Ok(out)
    }
}
