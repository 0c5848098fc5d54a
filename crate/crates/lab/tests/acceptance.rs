//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 4–6 check correctness and fail the target when they fail. The
//! others reproduce published measurements on whatever machine runs them;
//! they report PASS/FAIL but do not fail the target. Set
//! `PINT_ACCEPTANCE=quick` to skip the long reproduction runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use pint_core::dataset::{select_subset, CorrectionRecord, CorrectionStore, QueryTag, SubsetStrategy};
use pint_core::engine::{CorrectorKind, Normalization, Pint, PintConfig};
use pint_core::exec::{NoClock, Serial};
use pint_core::gp::{log_marginal_likelihood, GpFit, Hyperparams};
use pint_core::integrator::{RkOrder, SolverSpec};
use pint_core::perf::theoretical_runtime;
use pint_core::rng::keyed_rng;
use pint_core::systems::make_ode_system;
use pint_lab::output::write_run;
use pint_lab::{execute_all, expand, Experiment, Mode, RunOutcome};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Verdict {
    id: u32,
    title: &'static str,
    pass: Option<bool>,
    gating: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new(id: u32, title: &'static str, gating: bool) -> Self {
        Self {
            id,
            title,
            pass: Some(true),
            gating,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        if !ok {
            self.pass = Some(false);
        }
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }

    fn skipped(mut self, why: &str) -> Self {
        self.pass = None;
        self.lines.push(why.to_string());
        self
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Experiment {
    Experiment::load(&configs().join(name)).unwrap_or_else(|e| panic!("{e}"))
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_all(exp: &Experiment, mode: Mode) -> (Vec<RunOutcome>, f64) {
    let plans = expand(exp, mode, None).unwrap();
    let t = Instant::now();
    let out = execute_all(&plans, jobs());
    (out, t.elapsed().as_secs_f64())
}

fn k_of(o: &RunOutcome) -> Option<usize> {
    o.result.as_ref().ok().filter(|r| r.converged).map(|r| r.iterations)
}

fn describe(o: &RunOutcome) -> String {
    match &o.result {
        Ok(r) if r.converged => format!("K={} in {:.1}s", r.iterations, r.t_alg),
        Ok(r) => format!("unconverged after {} iterations, {:.1}s", r.iterations, r.t_alg),
        Err(e) => format!("failed: {e}"),
    }
}

fn find<'a>(outs: &'a [RunOutcome], template: &str, algorithm: &str) -> &'a RunOutcome {
    outs.iter()
        .find(|o| o.plan.template == template && o.plan.config.corrector.name() == algorithm)
        .unwrap_or_else(|| panic!("no {algorithm} run for {template}"))
}

const ALGORITHMS: [&str; 3] = ["parareal", "gparareal", "nngparareal"];

fn iteration_counts() -> Verdict {
    let mut v = Verdict::new(1, "iteration counts on four ODE benchmarks (±1, < 5 min per run)", false);
    let expected = [
        ("fhn", [11, 5, 5]),
        ("brusselator", [19, 20, 17]),
        ("lorenz", [15, 11, 9]),
        ("double_pendulum", [15, 10, 10]),
    ];
    let (outs, _) = run_all(&load("ode_desk.cfg"), Mode::Run);
    v.note(format!("{} worker thread(s); per-run budget 300 s", jobs()));
    for (system, ks) in expected {
        for (alg, want) in ALGORITHMS.iter().zip(ks) {
            let o = find(&outs, system, alg);
            let ok = k_of(o).is_some_and(|k| k.abs_diff(want) <= 1)
                && o.result.as_ref().is_ok_and(|r| r.t_alg < 300.0);
            v.check(ok, format!("{system:<16} {alg:<12} expected {want:>2}, {}", describe(o)));
        }
    }
    v
}

fn heat() -> Verdict {
    let mut v = Verdict::new(2, "heat equation: K 33±2 / 3±1, speed-ups ≥5 / ≥12, < 10 min", false);
    let mut exp = load("heat.cfg");
    for t in &mut exp.templates {
        t.max_wallclock = Some(600.0);
    }
    let (outs, secs) = run_all(&exp, Mode::Run);
    v.note(format!("{} worker thread(s); per-run budget 600 s", jobs()));
    for (alg, want, tol, speedup) in [("parareal", 33, 2, 5.0), ("nngparareal", 3, 1, 12.0)] {
        let o = find(&outs, "heat", alg);
        v.check(
            k_of(o).is_some_and(|k| k.abs_diff(want) <= tol),
            format!("{alg:<12} expected K={want}±{tol}, {}", describe(o)),
        );
        let s = o
            .result
            .as_ref()
            .ok()
            .filter(|r| r.converged)
            .and_then(|r| r.empirical_speedup)
            .map(|s| s.value);
        v.check(
            s.is_some_and(|s| s >= speedup),
            format!("{alg:<12} expected measured speed-up ≥ {speedup}, got {s:?}"),
        );
    }
    v.check(secs < 600.0, format!("total runtime {secs:.1}s (limit 600s)"));
    v
}

fn hopf_ordering() -> Verdict {
    let mut v = Verdict::new(3, "reduced Hopf: K_nnGP ≤ K_GP ≤ K_Para and matching S* order", false);
    let (outs, secs) = run_all(&load("hopf_reduced.cfg"), Mode::Run);
    let mut ks = Vec::new();
    let mut stars = Vec::new();
    for alg in ALGORITHMS {
        let o = find(&outs, "hopf", alg);
        v.note(format!("{alg:<12} {}", describe(o)));
        ks.push(k_of(o));
        stars.push(
            o.result
                .as_ref()
                .ok()
                .and_then(|r| r.speedup)
                .map(|s| s.s_star),
        );
    }
    match (ks[0], ks[1], ks[2]) {
        (Some(p), Some(g), Some(n)) => v.check(n <= g && g <= p, format!("K: parareal {p}, gparareal {g}, nngparareal {n}")),
        _ => v.check(false, "not every run converged".into()),
    }
    match (stars[0], stars[1], stars[2]) {
        (Some(p), Some(g), Some(n)) => v.check(
            n >= g && g >= p,
            format!("S*: parareal {p:.2}, gparareal {g:.2}, nngparareal {n:.2}"),
        ),
        _ => v.check(false, "S* unavailable".into()),
    }
    v.note(format!("{secs:.1}s"));
    v
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, quantum: Option<f64>) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let x: f64 = rng.random_range(-2.0..2.0);
                    quantum.map_or(x, |h| (x / h).round() * h)
                })
                .collect()
        })
        .collect()
}

fn store_of(inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> CorrectionStore {
    let mut s = CorrectionStore::new(inputs[0].len());
    s.insert_batch(
        inputs
            .iter()
            .zip(outputs)
            .enumerate()
            .map(|(i, (a, b))| CorrectionRecord {
                input: a.clone(),
                output: b.clone(),
                interval: i,
                iteration: 0,
            })
            .collect(),
    )
    .unwrap();
    s
}

fn dense_gram(x: &[Vec<f64>], hp: &Hyperparams) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        hp.sigma_o_sq * (-d2 / hp.sigma_i_sq).exp() + if i == j { hp.sigma_reg_sq } else { 0.0 }
    })
}

fn oracles() -> Verdict {
    const CASES: usize = 10_000;
    let mut v = Verdict::new(4, "oracle equivalences (10⁴ cases each, < 2 min)", true);
    let start = Instant::now();
    let mut rng = keyed_rng(2024, &[]);

    let mut mismatches = 0;
    for case in 0..CASES {
        let (n, d) = (rng.random_range(1..200), rng.random_range(1..5));
        let quantum = (case % 2 == 0).then_some(0.5);
        let pts = random_points(&mut rng, n, d, quantum);
        let store = store_of(&pts, &pts);
        let q = random_points(&mut rng, 1, d, quantum).remove(0);
        let m = rng.random_range(1..=n + 2);
        let tag = QueryTag::new(case as u64, 1, 2, 0);
        let got: Vec<usize> = store.query_m_nearest(&q, m, &tag).unwrap().iter().map(|c| c.index).collect();
        let mut all: Vec<(f64, u64, usize)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), tag.rank(i), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let want: Vec<usize> = all.iter().take(m).map(|c| c.2).collect();
        mismatches += usize::from(got != want);
    }
    v.check(mismatches == 0, format!("kd-tree vs full sort: {mismatches} of {CASES} queries differ"));

    let (mut worst_mean, mut worst_var, mut worst_lml, mut worst_nn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..CASES {
        let (n, d) = (rng.random_range(1..=20), rng.random_range(1..=3));
        let x = random_points(&mut rng, n, d, None);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q = random_points(&mut rng, 1, d, None).remove(0);
        let hp = Hyperparams::new(
            rng.random_range(0.05..5.0),
            rng.random_range(0.1..4.0),
            10f64.powf(rng.random_range(-4.0..-1.0)),
        );
        let k = dense_gram(&x, &hp);
        let inv = k.clone().try_inverse().unwrap();
        let yv = DVector::from_vec(y.clone());
        let ks = DVector::from_iterator(
            n,
            x.iter().map(|r| {
                let d2: f64 = r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                hp.sigma_o_sq * (-d2 / hp.sigma_i_sq).exp()
            }),
        );
        let mean = (ks.transpose() * &inv * &yv)[0];
        let var = (hp.sigma_o_sq - (ks.transpose() * &inv * &ks)[0]).max(0.0);
        let lml = -(yv.transpose() * &inv * &yv)[0] - k.determinant().ln();
        let flat: Vec<f64> = x.iter().flatten().copied().collect();
        let fit = GpFit::with_hyperparams(&flat, d, &y, &[hp]).unwrap();
        let scale = 1.0 + inv.norm() * (1.0 + yv.norm());
        worst_mean = worst_mean.max((fit.posterior_mean(0, &q) - mean).abs() / scale);
        worst_var = worst_var.max((fit.posterior_variance(0, &q) - var).abs() / (1.0 + inv.norm()));
        let got = log_marginal_likelihood(&flat, d, &y, &hp).unwrap();
        worst_lml = worst_lml.max((got - lml).abs() / ((1.0 + lml.abs()) * scale));

        let outputs: Vec<Vec<f64>> = (0..n).map(|i| vec![y[i]; d]).collect();
        let store = store_of(&x, &outputs);
        let idx = select_subset(&store, SubsetStrategy::Nearest, &q, 0, 1, n, &QueryTag::new(1, 1, 0, 0)).unwrap();
        let sub_in: Vec<f64> = idx.iter().flat_map(|&i| x[i].clone()).collect();
        let sub_out: Vec<f64> = idx.iter().flat_map(|&i| outputs[i].clone()).collect();
        let all_out: Vec<f64> = outputs.iter().flatten().copied().collect();
        let hps = vec![hp; d];
        let a = GpFit::with_hyperparams(&flat, d, &all_out, &hps).unwrap().predict(&q).unwrap();
        let b = GpFit::with_hyperparams(&sub_in, d, &sub_out, &hps).unwrap().predict(&q).unwrap();
        let cond = (inv.norm() * k.norm()).max(1.0);
        for (u, w) in a.iter().zip(&b) {
            worst_nn = worst_nn.max((u - w).abs() / ((1.0 + u.abs()) * cond));
        }
    }
    v.check(worst_mean <= 1e-8, format!("GP posterior mean vs dense inverse: worst scaled error {worst_mean:.2e}"));
    v.check(worst_var <= 1e-8, format!("GP posterior variance vs dense inverse: worst scaled error {worst_var:.2e}"));
    v.check(worst_lml <= 1e-8, format!("log-likelihood vs dense inverse/determinant: worst scaled error {worst_lml:.2e}"));
    v.check(worst_nn <= 1e-10, format!("nnGP with m = |D| vs full GP: worst scaled error {worst_nn:.2e}"));

    let mut inexact = 0;
    for _ in 0..CASES {
        let n = rng.random_range(2..600usize);
        let k = rng.random_range(1..=n);
        let mut dyadic = || rng.random_range(0u32..1 << 20) as f64 / 256.0;
        let (t_g, t_f) = (dyadic(), dyadic());
        let t_model: Vec<f64> = (0..k).map(|_| dyadic()).collect();
        let mut summed = n as f64 * t_g;
        for (j, tm) in t_model.iter().enumerate() {
            summed += t_f + (n - (j + 1)) as f64 * t_g + tm;
        }
        let closed = theoretical_runtime(n, k, t_g, t_f, t_model.iter().sum());
        inexact += usize::from(closed.to_bits() != summed.to_bits());
    }
    v.check(inexact == 0, format!("runtime model vs per-iteration sum: {inexact} of {CASES} differ"));
    let secs = start.elapsed().as_secs_f64();
    v.check(secs < 120.0, format!("{secs:.1}s (limit 120s)"));
    v
}

fn exactness() -> Verdict {
    let mut v = Verdict::new(5, "exactness frontier and K = N reproduce the serial fine solution (1e-10)", true);
    let cases = [
        ("fhn", 10, RkOrder::Rk2, 2, RkOrder::Rk4, 400),
        ("lorenz", 12, RkOrder::Rk4, 4, RkOrder::Rk4, 100),
        ("brusselator", 8, RkOrder::Rk4, 10, RkOrder::Rk4, 200),
        ("double_pendulum", 8, RkOrder::Rk1, 40, RkOrder::Rk8, 100),
    ];
    for (name, n, go, gs, fo, fs) in cases {
        let sys = make_ode_system(name, &[]).unwrap();
        let sys = sys.clone().with_span(sys.t_start, sys.t_start + (sys.t_end - sys.t_start).min(4.0)).unwrap();
        for corrector in [
            CorrectorKind::Parareal,
            CorrectorKind::NnGParareal {
                m: 5,
                strategy: SubsetStrategy::Nearest,
            },
        ] {
            let mut c = PintConfig::new(n, SolverSpec::new(go, gs).unwrap(), SolverSpec::new(fo, fs).unwrap(), corrector);
            c.epsilon = 1e-300;
            c.normalization = Normalization::None;
            c.gp.n_start = 2;
            let pint = Pint::new(&sys, c, &Serial, &NoClock).unwrap();
            let serial = pint.serial_fine().unwrap();
            let (report, state) = match pint.run_with_state() {
                Ok(x) => x,
                Err(e) => {
                    v.check(false, format!("{name} {corrector}: {e}"));
                    continue;
                }
            };
            let mut worst = 0.0f64;
            for (k, row) in state.u.iter().enumerate() {
                for i in 0..=k.min(n) {
                    for (a, b) in row[i].iter().zip(&serial[i]) {
                        worst = worst.max((a - b).abs() / (1.0 + b.abs()));
                    }
                }
            }
            let full = report
                .solution
                .iter()
                .flatten()
                .zip(serial.iter().flatten())
                .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                .fold(0.0, f64::max);
            v.check(
                worst <= 1e-10 && full <= 1e-10 && report.iterations == n,
                format!("{name:<16} {corrector}: K={}, frontier error {worst:.1e}, final error {full:.1e}", report.iterations),
            );
        }
    }
    v
}

fn determinism() -> Verdict {
    let mut v = Verdict::new(6, "identical solution CSVs and K on 1 thread and all threads", true);
    let text = r#"
        corrector.kind = ["parareal", "mnn_uniform", "gparareal", "nngparareal"]
        corrector.m = 6
        corrector.strategy = ["nearest", "col_rnd"]
        gp.n_start = 3
        sweep.seeds = [0, 11]

        [[run]]
        system.name = "lorenz"
        system.t_end = 4.0
        pint.N = 12
        coarse = { order = 4, steps = 8 }
        fine = { order = 4, steps = 200 }

        [[run]]
        system.name = "fhn"
        pint.N = 20
        coarse = { order = 2, steps = 16 }
        fine = { order = 4, steps = 400 }
    "#;
    let exp = Experiment::parse(text, Path::new("determinism.cfg")).unwrap();
    let plans = expand(&exp, Mode::Run, None).unwrap();
    let one = execute_all(&plans, 1);
    let many = execute_all(&plans, jobs().max(4));
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = 0;
    for (a, b) in one.iter().zip(&many) {
        let (da, db) = (tmp.path().join("a").join(&a.plan.label), tmp.path().join("b").join(&b.plan.label));
        write_run(&da, a).unwrap();
        write_run(&db, b).unwrap();
        let same_csv = std::fs::read(da.join("solution.csv")).ok() == std::fs::read(db.join("solution.csv")).ok();
        let same_k = a.result.as_ref().map(|r| r.iterations).ok() == b.result.as_ref().map(|r| r.iterations).ok();
        if same_csv && same_k && a.result.is_ok() {
            identical += 1;
        } else {
            v.check(false, format!("{}: {} vs {}", a.plan.label, describe(a), describe(b)));
        }
    }
    v.check(
        identical == plans.len(),
        format!("{identical} of {} runs identical (1 vs {} threads)", plans.len(), jobs().max(4)),
    );
    v
}

fn m_robustness() -> Verdict {
    let mut v = Verdict::new(7, "FHN nnGParareal, m = 10..20 × 5 seeds: K ∈ [4, 7], < 15 min", false);
    let (outs, secs) = run_all(&load("fhn_sweep_m.cfg"), Mode::SweepM);
    let ks: Vec<Option<usize>> = outs.iter().map(k_of).collect();
    let good = ks.iter().filter(|k| k.is_some_and(|k| (4..=7).contains(&k))).count();
    let shown: Vec<String> = ks.iter().map(|k| k.map_or("-".into(), |k| k.to_string())).collect();
    v.note(format!("K per (m, seed): {}", shown.join(" ")));
    v.check(good == 55 && outs.len() == 55, format!("{good} of {} runs with K in [4, 7]", outs.len()));
    v.check(secs < 900.0, format!("{secs:.1}s on {} thread(s) (limit 900s)", jobs()));
    v
}

fn heuristics() -> Verdict {
    let mut v = Verdict::new(8, "FHN subset heuristics: nearest is best, col_rnd K = 8±1", false);
    let (outs, _) = run_all(&load("fhn_heuristics.cfg"), Mode::Run);
    let k = |s: &str| {
        outs.iter()
            .find(|o| matches!(o.plan.config.corrector, CorrectorKind::NnGParareal { strategy, .. } if strategy.name() == s))
            .and_then(k_of)
    };
    for o in &outs {
        v.note(format!("{:<40} {}", o.plan.label, describe(o)));
    }
    let nearest = k("nearest");
    for s in ["col_rnd", "col_only", "row_col", "row_major", "col_major"] {
        let other = k(s);
        v.check(
            matches!((nearest, other), (Some(a), Some(b)) if a <= b),
            format!("nearest {nearest:?} ≤ {s} {other:?}"),
        );
    }
    let col_rnd = k("col_rnd");
    v.check(col_rnd.is_some_and(|k| k.abs_diff(8) <= 1), format!("col_rnd K = {col_rnd:?}"));
    v
}

fn main() {
    let quick = std::env::var("PINT_ACCEPTANCE").is_ok_and(|v| v == "quick");
    let long: [(u32, &'static str, fn() -> Verdict); 5] = [
        (1, "iteration counts on four ODE benchmarks", iteration_counts),
        (2, "heat equation", heat),
        (3, "reduced Hopf ordering", hopf_ordering),
        (7, "FHN m-robustness", m_robustness),
        (8, "FHN subset heuristics", heuristics),
    ];
    let mut verdicts = vec![oracles(), exactness(), determinism()];
    for (id, title, f) in long {
        let verdict = if quick {
            Verdict::new(id, title, false).skipped("     skipped: PINT_ACCEPTANCE=quick")
        } else {
            f()
        };
        verdicts.push(verdict);
    }
    verdicts.sort_by_key(|v| v.id);
    let mut gating_failures = 0;
    for v in &verdicts {
        let tag = match v.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        println!("{tag} criterion {}: {}", v.id, v.title);
        for l in &v.lines {
            println!("    {l}");
        }
        if v.gating && v.pass == Some(false) {
            gating_failures += 1;
        }
    }
    let passed = verdicts.iter().filter(|v| v.pass == Some(true)).count();
    println!("acceptance: {passed} of {} criteria passed", verdicts.len());
    if gating_failures > 0 {
        std::process::exit(1);
    }
}
