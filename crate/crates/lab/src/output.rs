//! Report and CSV files.

use std::fs;
use std::io;
use std::path::Path;

use pint_core::engine::{CorrectorKind, RunReport};

use crate::runner::RunOutcome;

pub const REPORT: &str = "report.json";
pub const CONVERGENCE: &str = "convergence.csv";
pub const SOLUTION: &str = "solution.csv";
pub const ERROR: &str = "error.txt";
pub const SUMMARY: &str = "summary.csv";
pub const SPEEDUP: &str = "speedup.csv";
pub const SWEEP_M: &str = "sweep_m.csv";
pub const SWEEP_COARSE: &str = "sweep_coarse.csv";

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()
}

pub fn convergence_rows(r: &RunReport) -> Vec<Vec<String>> {
    r.per_iteration
        .iter()
        .map(|it| {
            vec![
                it.k.to_string(),
                it.frontier.to_string(),
                num(it.t_g),
                num(it.t_f),
                num(it.t_model),
                num(it.cumulative),
            ]
        })
        .collect()
}

pub fn solution_header(dim: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((0..dim).map(|c| format!("u{c}")))
        .collect()
}

pub fn solution_rows(r: &RunReport) -> Vec<Vec<String>> {
    r.times
        .iter()
        .zip(&r.solution)
        .map(|(t, u)| std::iter::once(num(*t)).chain(u.iter().map(|&v| num(v))).collect())
        .collect()
}

/// Writes `report.json`, `convergence.csv` and `solution.csv` for a
/// successful run, or `error.txt` for a failed one.
pub fn write_run(dir: &Path, outcome: &RunOutcome) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for stale in [REPORT, CONVERGENCE, SOLUTION, ERROR] {
        let p = dir.join(stale);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    match &outcome.result {
        Ok(r) => {
            fs::write(dir.join(REPORT), serde_json::to_string_pretty(r).map_err(io::Error::other)?)?;
            write_csv(
                &dir.join(CONVERGENCE),
                &["k", "L_k", "T_G", "T_F", "T_model", "cumulative"],
                convergence_rows(r),
            )?;
            let header = solution_header(r.dim);
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_csv(&dir.join(SOLUTION), &header, solution_rows(r))
        }
        Err(e) => fs::write(dir.join(ERROR), format!("{e}\n")),
    }
}

pub fn read_report(dir: &Path) -> io::Result<RunReport> {
    let text = fs::read_to_string(dir.join(REPORT))?;
    serde_json::from_str(&text).map_err(io::Error::other)
}

fn m_of(c: &CorrectorKind) -> String {
    c.neighbours().map(|m| m.to_string()).unwrap_or_default()
}

fn strategy_of(c: &CorrectorKind) -> String {
    match c {
        CorrectorKind::NnGParareal { strategy, .. } => strategy.to_string(),
        _ => String::new(),
    }
}

fn k_if_converged(o: &RunOutcome) -> String {
    match &o.result {
        Ok(r) if r.converged => r.iterations.to_string(),
        _ => String::new(),
    }
}

fn speedups(r: Option<&RunReport>) -> [String; 3] {
    let r = r.filter(|r| r.converged);
    [
        opt(r.and_then(|r| r.speedup).map(|s| s.s_star)),
        opt(r.and_then(|r| r.speedup).map(|s| s.s_alg)),
        opt(r.and_then(|r| r.empirical_speedup).map(|s| s.value)),
    ]
}

pub fn write_summary(path: &Path, outcomes: &[RunOutcome]) -> io::Result<()> {
    let rows = outcomes.iter().map(|o| {
        let c = &o.plan.config;
        let r = o.result.as_ref().ok();
        let [s_star, s_alg, s_emp] = speedups(r);
        vec![
            o.plan.label.clone(),
            o.plan.system.name.clone(),
            c.corrector.name().to_string(),
            m_of(&c.corrector),
            strategy_of(&c.corrector),
            c.intervals.to_string(),
            c.coarse.steps_per_interval.to_string(),
            c.fine.steps_per_interval.to_string(),
            c.seed.to_string(),
            r.is_some_and(|r| r.converged).to_string(),
            r.map(|r| r.iterations.to_string()).unwrap_or_default(),
            opt(r.map(|r| r.t_alg)),
            opt(r.map(|r| r.t_g_per_interval)),
            opt(r.map(|r| r.t_f_per_interval)),
            opt(r.map(|r| r.t_model_total)),
            s_star,
            s_alg,
            s_emp,
            o.result.as_ref().err().cloned().unwrap_or_default(),
        ]
    });
    write_csv(
        path,
        &[
            "label", "system", "algorithm", "m", "strategy", "N", "coarse_steps", "fine_steps", "seed", "converged", "K",
            "T_alg", "T_G", "T_F", "T_model", "S_star", "S_theoretical", "S_empirical", "error",
        ],
        rows,
    )
}

/// Speed-up table, one row per converged run.
pub fn write_speedup(path: &Path, outcomes: &[RunOutcome]) -> io::Result<()> {
    let rows = outcomes.iter().filter(|o| o.converged()).map(|o| {
        let [s_star, s_alg, s_emp] = speedups(o.result.as_ref().ok());
        vec![
            o.plan.label.clone(),
            o.plan.config.corrector.name().to_string(),
            o.plan.config.intervals.to_string(),
            s_star,
            s_alg,
            s_emp,
        ]
    });
    write_csv(path, &["label", "algorithm", "N", "S_star", "S_theoretical", "S_empirical"], rows)
}

/// `K` per `(m, seed)`; `K` is empty for runs that did not converge.
pub fn write_sweep_m(path: &Path, outcomes: &[RunOutcome]) -> io::Result<()> {
    let rows = outcomes.iter().map(|o| {
        let c = &o.plan.config;
        vec![
            o.plan.label.clone(),
            c.corrector.name().to_string(),
            strategy_of(&c.corrector),
            m_of(&c.corrector),
            c.seed.to_string(),
            k_if_converged(o),
            opt(o.result.as_ref().ok().map(|r| r.t_alg)),
        ]
    });
    write_csv(path, &["label", "algorithm", "strategy", "m", "seed", "K", "T_alg"], rows)
}

/// `K`, timings and speed-ups per coarse step count; cells of runs that did
/// not converge are empty.
pub fn write_sweep_coarse(path: &Path, outcomes: &[RunOutcome]) -> io::Result<()> {
    let rows = outcomes.iter().map(|o| {
        let c = &o.plan.config;
        let r = o.result.as_ref().ok().filter(|r| r.converged);
        let [s_star, s_alg, s_emp] = speedups(r);
        vec![
            o.plan.label.clone(),
            c.corrector.name().to_string(),
            c.coarse.steps_per_interval.to_string(),
            c.seed.to_string(),
            k_if_converged(o),
            opt(r.map(|r| r.t_g_per_interval)),
            opt(r.map(|r| r.t_f_per_interval)),
            opt(r.map(|r| r.t_model_total)),
            s_star,
            s_alg,
            s_emp,
        ]
    });
    write_csv(
        path,
        &[
            "label", "algorithm", "coarse_steps", "seed", "K", "T_G", "T_F", "T_model", "S_star", "S_theoretical",
            "S_empirical",
        ],
        rows,
    )
}
