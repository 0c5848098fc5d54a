//! Expansion of templates into concrete runs, and their execution.

use std::time::Instant;

use pint_core::engine::{CorrectorKind, Pint, PintConfig, RunReport};
use pint_core::exec::{Clock, Executor};
use pint_core::integrator::SolverSpec;
use pint_core::perf::{empirical_speedup, SerialReference};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, RunTemplate, SerialMode};
use crate::systems::SystemChoice;

/// Runs work items on the current rayon pool, returning them in index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    SweepM,
    SweepCoarse,
}

/// A single engine invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub label: String,
    pub template: String,
    pub system: SystemChoice,
    pub config: PintConfig,
    pub serial: SerialMode,
}

impl RunPlan {
    pub fn execute(&self) -> RunOutcome {
        let clock = WallClock::new();
        let result = self.execute_with(&Rayon, &clock);
        RunOutcome {
            plan: self.clone(),
            result: result.map_err(|e| e.to_string()),
        }
    }

    pub fn execute_with<E: Executor, C: Clock>(&self, exec: &E, clock: &C) -> pint_core::Result<RunReport> {
        let system = self.system.build(self.config.seed)?;
        let pint = Pint::new(&system, self.config.clone(), exec, clock)?;
        let mut report = pint.run()?;
        if self.serial == SerialMode::Measured {
            let t = clock.now();
            pint.serial_fine()?;
            let seconds = clock.now() - t;
            if report.t_alg > 0.0 {
                report.empirical_speedup = Some(empirical_speedup(report.t_alg, SerialReference::Measured { seconds }));
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub plan: RunPlan,
    pub result: Result<RunReport, String>,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.result.as_ref().is_ok_and(|r| r.converged)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("{path}:{line}: `{label}` has no `sweep.{key}` list")]
    MissingSweep {
        path: String,
        line: usize,
        label: String,
        key: &'static str,
    },
}

fn corrector_tag(c: &CorrectorKind) -> String {
    match c {
        CorrectorKind::MnnUniform { m } => format!("mnn{m}"),
        CorrectorKind::NnGParareal { m, strategy } => format!("nngp{m}-{strategy}"),
        other => other.name().to_string(),
    }
}

fn plan(t: &RunTemplate, n: usize, coarse_steps: usize, corrector: CorrectorKind, seed: u64, serial: SerialMode) -> RunPlan {
    let coarse = SolverSpec::new(t.coarse.order, coarse_steps).expect("validated step count");
    let fine = SolverSpec::new(t.fine.order, t.fine.steps.per_interval(n)).expect("validated step count");
    let mut config = PintConfig::new(n, coarse, fine, corrector);
    config.epsilon = t.epsilon;
    config.gp = t.gp.clone();
    config.seed = seed;
    config.normalization = t.normalization.clone();
    config.max_wallclock = t.max_wallclock;
    config.divergence = t.divergence;
    RunPlan {
        label: format!("{}-{}-N{n}-g{coarse_steps}-s{seed}", t.label, corrector_tag(&corrector)),
        template: t.label.clone(),
        system: t.system.clone(),
        config,
        serial,
    }
}

/// Every run the command performs, in a fixed order. `seed` replaces each
/// template's seed list.
pub fn expand(exp: &Experiment, mode: Mode, seed: Option<u64>) -> Result<Vec<RunPlan>, PlanError> {
    let mut plans = Vec::new();
    for t in &exp.templates {
        let seeds = seed.map_or_else(|| t.seeds.clone(), |s| vec![s]);
        let missing = |key| PlanError::MissingSweep {
            path: exp.path.display().to_string(),
            line: t.line,
            label: t.label.clone(),
            key,
        };
        for &n in &t.intervals {
            let default_coarse = t.coarse.steps.per_interval(n);
            match mode {
                Mode::Run => {
                    for &c in &t.correctors {
                        for &s in &seeds {
                            plans.push(plan(t, n, default_coarse, c, s, t.serial));
                        }
                    }
                }
                Mode::SweepM => {
                    let ms = t.sweep_m.as_ref().ok_or_else(|| missing("m"))?;
                    let mut kinds: Vec<CorrectorKind> = Vec::new();
                    for c in &t.correctors {
                        let k = match *c {
                            CorrectorKind::MnnUniform { .. } => CorrectorKind::MnnUniform { m: 0 },
                            CorrectorKind::NnGParareal { strategy, .. } => CorrectorKind::NnGParareal { m: 0, strategy },
                            _ => continue,
                        };
                        if !kinds.contains(&k) {
                            kinds.push(k);
                        }
                    }
                    if kinds.is_empty() {
                        kinds.push(CorrectorKind::NnGParareal {
                            m: 0,
                            strategy: Default::default(),
                        });
                    }
                    for k in &kinds {
                        for &m in ms {
                            let c = match *k {
                                CorrectorKind::MnnUniform { .. } => CorrectorKind::MnnUniform { m },
                                CorrectorKind::NnGParareal { strategy, .. } => CorrectorKind::NnGParareal { m, strategy },
                                other => other,
                            };
                            for &s in &seeds {
                                plans.push(plan(t, n, default_coarse, c, s, t.serial));
                            }
                        }
                    }
                }
                Mode::SweepCoarse => {
                    let steps = t.sweep_coarse.as_ref().ok_or_else(|| missing("coarse_steps"))?;
                    for &g in steps {
                        for &c in &t.correctors {
                            for &s in &seeds {
                                plans.push(plan(t, n, g, c, s, t.serial));
                            }
                        }
                    }
                }
            }
        }
    }
    let mut seen = std::collections::HashMap::new();
    for p in &mut plans {
        let count = seen.entry(p.label.clone()).or_insert(0usize);
        *count += 1;
        if *count > 1 {
            p.label = format!("{}-{}", p.label, *count);
        }
    }
    Ok(plans)
}

/// Executes the plans on a pool of `jobs` threads. Runs and each run's
/// internal parallel work share the pool, so at most `jobs` threads work at
/// once. Results come back in plan order.
pub fn execute_all(plans: &[RunPlan], jobs: usize) -> Vec<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| plans.par_iter().map(RunPlan::execute).collect())
}
