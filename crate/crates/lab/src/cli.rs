//! Command-line entry point.
//!
//! Exit codes: 0 when every run converged, 2 when any run stopped
//! unconverged or failed, 1 for unusable input.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::Experiment;
use crate::output;
use crate::runner::{execute_all, expand, Mode, RunOutcome};

pub const THREADS_ENV: &str = "PINT_LAB_THREADS";
const DEFAULT_OUT: &str = "pint-out";

#[derive(Debug, Parser)]
#[command(name = "pint-lab", version, about = "Parareal, GParareal and nnGParareal experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (system, corrector, N, seed) combination of the file.
    Run(Common),
    /// Run the m-based correctors over `sweep.m` and every seed.
    SweepM(Common),
    /// Run every corrector over `sweep.coarse_steps` (per interval).
    SweepCoarse(Common),
    /// Summarize the reports a previous `run` left in the output directory.
    Report(Common),
}

#[derive(Debug, Args)]
struct Common {
    config: PathBuf,
    /// Worker threads shared by all runs; PINT_LAB_THREADS takes precedence.
    #[arg(long)]
    jobs: Option<usize>,
    /// Use this seed instead of the file's seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `output.dir` or `pint-out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Worker count from the environment, the flag, or the host, in that order.
pub fn resolve_jobs(flag: Option<usize>) -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(flag.filter(|&n| n > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (mode, common) = match cli.command {
        Command::Run(c) => (Some(Mode::Run), c),
        Command::SweepM(c) => (Some(Mode::SweepM), c),
        Command::SweepCoarse(c) => (Some(Mode::SweepCoarse), c),
        Command::Report(c) => (None, c),
    };
    let exp = match Experiment::load(&common.config) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let out = common
        .out
        .clone()
        .or_else(|| exp.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match mode {
        Some(mode) => run(&exp, mode, &common, &out),
        None => report(&exp, &common, &out),
    }
}

fn run(exp: &Experiment, mode: Mode, common: &Common, out: &Path) -> i32 {
    let plans = match expand(exp, mode, common.seed) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let jobs = resolve_jobs(common.jobs);
    eprintln!("{} run(s) on {jobs} thread(s) -> {}", plans.len(), out.display());
    let outcomes = execute_all(&plans, jobs);
    if let Err(e) = write_outputs(out, mode, &outcomes) {
        eprintln!("error: writing {}: {e}", out.display());
        return 1;
    }
    print_table(&outcomes);
    exit_code(&outcomes)
}

fn write_outputs(out: &Path, mode: Mode, outcomes: &[RunOutcome]) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    for o in outcomes {
        output::write_run(&out.join(&o.plan.label), o)?;
    }
    output::write_summary(&out.join(output::SUMMARY), outcomes)?;
    output::write_speedup(&out.join(output::SPEEDUP), outcomes)?;
    match mode {
        Mode::Run => Ok(()),
        Mode::SweepM => output::write_sweep_m(&out.join(output::SWEEP_M), outcomes),
        Mode::SweepCoarse => output::write_sweep_coarse(&out.join(output::SWEEP_COARSE), outcomes),
    }
}

fn report(exp: &Experiment, common: &Common, out: &Path) -> i32 {
    let plans = match expand(exp, Mode::Run, common.seed) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let mut outcomes = Vec::with_capacity(plans.len());
    for plan in plans {
        let dir = out.join(&plan.label);
        let result = match output::read_report(&dir) {
            Ok(r) => Ok(r),
            Err(_) => match std::fs::read_to_string(dir.join(output::ERROR)) {
                Ok(msg) => Err(msg.trim().to_string()),
                Err(_) => {
                    eprintln!("error: no report for `{}` in {}; run `pint-lab run` first", plan.label, out.display());
                    return 1;
                }
            },
        };
        outcomes.push(RunOutcome { plan, result });
    }
    let written = output::write_summary(&out.join(output::SUMMARY), &outcomes)
        .and_then(|_| output::write_speedup(&out.join(output::SPEEDUP), &outcomes));
    if let Err(e) = written {
        eprintln!("error: writing {}: {e}", out.display());
        return 1;
    }
    print_table(&outcomes);
    exit_code(&outcomes)
}

fn print_table(outcomes: &[RunOutcome]) {
    println!("{:<48} {:>4} {:>9} {:>10} {:>8} {:>8}", "run", "K", "converged", "T_alg [s]", "S*", "S_alg");
    for o in outcomes {
        match &o.result {
            Ok(r) => {
                let (s_star, s_alg) = r.speedup.map_or((f64::NAN, f64::NAN), |s| (s.s_star, s.s_alg));
                println!(
                    "{:<48} {:>4} {:>9} {:>10.3} {:>8.2} {:>8.2}",
                    o.plan.label, r.iterations, r.converged, r.t_alg, s_star, s_alg
                );
            }
            Err(e) => println!("{:<48} failed: {e}", o.plan.label),
        }
    }
}

fn exit_code(outcomes: &[RunOutcome]) -> i32 {
    if outcomes.iter().all(RunOutcome::converged) {
        0
    } else {
        2
    }
}
