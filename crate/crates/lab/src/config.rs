//! Experiment files.
//!
//! An experiment is a TOML document. Top-level sections (written as tables
//! or as dotted keys such as `corrector.m = 15`) describe a default run;
//! each `[[run]]` block overrides them field by field and becomes one run
//! template. Without `[[run]]` blocks the top level is the only template.
//!
//! ```toml
//! system.name = "fhn"
//! pint.N = 40
//! coarse = { order = 2, total_steps = 160 }
//! fine = { order = 4, total_steps = 160000 }
//! corrector.kind = ["parareal", "gparareal", "nngparareal"]
//! corrector.m = 15
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use pint_core::dataset::SubsetStrategy;
use pint_core::engine::{CorrectorKind, DivergencePolicy, Normalization, DEFAULT_EPSILON};
use pint_core::gp::FitOptions;
use pint_core::integrator::RkOrder;
use serde::Deserialize;
use toml::Spanned;

use crate::systems::SystemChoice;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    At {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

macro_rules! overlay {
    ($base:expr, $over:expr; $($field:ident),+) => {{
        let over = $over;
        $( if over.$field.is_some() { $base.$field = over.$field; } )+
    }};
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    name: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    t_start: Option<f64>,
    t_end: Option<f64>,
    u0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    order: Option<u32>,
    steps: Option<usize>,
    total_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PintSection {
    #[serde(rename = "N")]
    n: Option<OneOrMany<usize>>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    normalization: Option<String>,
    margin: Option<f64>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    max_wallclock: Option<f64>,
    divergence: Option<DivergencePolicy>,
    serial: Option<SerialMode>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrectorSection {
    kind: Option<OneOrMany<String>>,
    m: Option<OneOrMany<usize>>,
    strategy: Option<OneOrMany<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GpSection {
    n_start: Option<usize>,
    nugget_grid: Option<Vec<f64>>,
    max_iterations: Option<usize>,
    f_tolerance: Option<f64>,
    initial_step: Option<f64>,
    init_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    seeds: Option<Vec<u64>>,
    m: Option<Vec<usize>>,
    coarse_steps: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Layer {
    label: Option<String>,
    system: Option<Spanned<SystemSection>>,
    pint: Option<Spanned<PintSection>>,
    coarse: Option<Spanned<SolverSection>>,
    fine: Option<Spanned<SolverSection>>,
    corrector: Option<Spanned<CorrectorSection>>,
    gp: Option<Spanned<GpSection>>,
    sweep: Option<Spanned<SweepSection>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    label: Option<String>,
    system: Option<Spanned<SystemSection>>,
    pint: Option<Spanned<PintSection>>,
    coarse: Option<Spanned<SolverSection>>,
    fine: Option<Spanned<SolverSection>>,
    corrector: Option<Spanned<CorrectorSection>>,
    gp: Option<Spanned<GpSection>>,
    sweep: Option<Spanned<SweepSection>>,
    output: Option<OutputSection>,
    run: Option<Vec<Spanned<Layer>>>,
}

/// Where the serial fine time for the empirical speed-up comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SerialMode {
    /// `N` times the mean fine cost per interval of the first sweep.
    #[default]
    Estimated,
    /// Run the fine solver serially over the whole span after the run.
    Measured,
}

/// Step count as written: per interval, or in total over the span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Steps {
    PerInterval(usize),
    Total(usize),
}

impl Steps {
    pub fn per_interval(self, n: usize) -> usize {
        match self {
            Steps::PerInterval(s) => s,
            Steps::Total(s) => s.div_ceil(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverChoice {
    pub order: RkOrder,
    pub steps: Steps,
}

/// One fully resolved `[[run]]` block (or the top level).
#[derive(Debug, Clone)]
pub struct RunTemplate {
    pub label: String,
    pub system: SystemChoice,
    pub intervals: Vec<usize>,
    pub coarse: SolverChoice,
    pub fine: SolverChoice,
    pub correctors: Vec<CorrectorKind>,
    pub epsilon: f64,
    pub normalization: Normalization,
    pub max_wallclock: Option<f64>,
    pub divergence: DivergencePolicy,
    pub serial: SerialMode,
    pub gp: FitOptions,
    pub seeds: Vec<u64>,
    pub sweep_m: Option<Vec<usize>>,
    pub sweep_coarse: Option<Vec<usize>>,
    /// 1-based line of the block the template came from.
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub path: PathBuf,
    pub templates: Vec<RunTemplate>,
    pub out_dir: Option<PathBuf>,
}

struct Located {
    path: String,
    text: String,
}

impl Located {
    fn line_col(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
        (line, column)
    }

    fn err(&self, offset: usize, message: impl fmt::Display) -> ConfigError {
        let (line, column) = self.line_col(offset);
        ConfigError::At {
            path: self.path.clone(),
            line,
            column,
            message: message.to_string(),
        }
    }
}

fn merge<T: Clone>(
    base: &Option<Spanned<T>>,
    over: &Option<Spanned<T>>,
    apply: impl Fn(&mut T, &T),
) -> Option<(T, usize)> {
    match (base, over) {
        (None, None) => None,
        (Some(b), None) => Some((b.get_ref().clone(), b.span().start)),
        (None, Some(o)) => Some((o.get_ref().clone(), o.span().start)),
        (Some(b), Some(o)) => {
            let mut v = b.get_ref().clone();
            apply(&mut v, o.get_ref());
            Some((v, o.span().start))
        }
    }
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let loc = Located {
            path: path.display().to_string(),
            text: text.to_string(),
        };
        let file: File = toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            loc.err(offset, e.message())
        })?;
        let base = Layer {
            label: file.label.clone(),
            system: file.system.clone(),
            pint: file.pint.clone(),
            coarse: file.coarse.clone(),
            fine: file.fine.clone(),
            corrector: file.corrector.clone(),
            gp: file.gp.clone(),
            sweep: file.sweep.clone(),
        };
        let templates = match &file.run {
            None => vec![resolve(&loc, &base, &Layer::default(), 0)?],
            Some(runs) if runs.is_empty() => return Err(loc.err(0, "`run` is an empty list")),
            Some(runs) => runs
                .iter()
                .map(|r| resolve(&loc, &base, r.get_ref(), r.span().start))
                .collect::<Result<_, _>>()?,
        };
        Ok(Self {
            path: path.to_path_buf(),
            templates,
            out_dir: file.output.and_then(|o| o.dir).map(PathBuf::from),
        })
    }
}

fn resolve(loc: &Located, base: &Layer, over: &Layer, block: usize) -> Result<RunTemplate, ConfigError> {
    let system = merge(&base.system, &over.system, |b, o| {
        overlay!(b, o.clone(); name, params, t_start, t_end, u0)
    });
    let pint = merge(&base.pint, &over.pint, |b, o| {
        overlay!(b, o.clone(); n, epsilon, seed, normalization, margin, lo, hi, max_wallclock, divergence, serial)
    });
    let solver = |b: &mut SolverSection, o: &SolverSection| {
        if o.steps.is_some() || o.total_steps.is_some() {
            b.steps = o.steps;
            b.total_steps = o.total_steps;
        }
        if o.order.is_some() {
            b.order = o.order;
        }
    };
    let coarse = merge(&base.coarse, &over.coarse, solver);
    let fine = merge(&base.fine, &over.fine, solver);
    let corrector = merge(&base.corrector, &over.corrector, |b, o| {
        overlay!(b, o.clone(); kind, m, strategy)
    });
    let gp = merge(&base.gp, &over.gp, |b, o| {
        overlay!(b, o.clone(); n_start, nugget_grid, max_iterations, f_tolerance, initial_step, init_range)
    });
    let sweep = merge(&base.sweep, &over.sweep, |b, o| {
        overlay!(b, o.clone(); seeds, m, coarse_steps)
    });

    let (system, sys_at) = system.ok_or_else(|| loc.err(block, "missing `system` section"))?;
    let name = system
        .name
        .clone()
        .ok_or_else(|| loc.err(sys_at, "missing `system.name`"))?;
    let choice = SystemChoice {
        name: name.clone(),
        params: system.params.clone().unwrap_or_default().into_iter().collect(),
        t_start: system.t_start,
        t_end: system.t_end,
        u0: system.u0.clone(),
    };
    let dim = choice
        .build(0)
        .map_err(|e| loc.err(sys_at, format!("system: {e}")))?
        .dim();

    let (pint, pint_at) = pint.unwrap_or_default();
    let intervals = pint
        .n
        .clone()
        .ok_or_else(|| loc.err(pint_at.max(block), "missing `pint.N`"))?
        .into_vec();
    if intervals.is_empty() || intervals.iter().any(|&n| n < 2) {
        return Err(loc.err(pint_at, "`pint.N` must be a nonempty list of values ≥ 2"));
    }
    let epsilon = pint.epsilon.unwrap_or(DEFAULT_EPSILON);
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(loc.err(pint_at, format!("`pint.epsilon` = {epsilon} must be positive")));
    }
    let normalization = match pint.normalization.as_deref().unwrap_or("from_coarse") {
        "none" => Normalization::None,
        "from_coarse" => Normalization::FromCoarse {
            margin: pint.margin.unwrap_or(0.1),
        },
        "explicit" => match (&pint.lo, &pint.hi) {
            (Some(lo), Some(hi)) if lo.len() == dim && hi.len() == dim => Normalization::Explicit {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            _ => {
                return Err(loc.err(
                    pint_at,
                    format!("explicit normalization needs `pint.lo` and `pint.hi` with {dim} entries"),
                ))
            }
        },
        other => {
            return Err(loc.err(
                pint_at,
                format!("unknown normalization `{other}`; expected none, from_coarse or explicit"),
            ))
        }
    };
    if let Some(b) = pint.max_wallclock {
        if !(b > 0.0) {
            return Err(loc.err(pint_at, "`pint.max_wallclock` must be positive"));
        }
    }

    let solver_choice = |s: Option<(SolverSection, usize)>, which: &str| -> Result<SolverChoice, ConfigError> {
        let (s, at) = s.ok_or_else(|| loc.err(block, format!("missing `{which}` section")))?;
        let order = s.order.ok_or_else(|| loc.err(at, format!("missing `{which}.order`")))?;
        let order = RkOrder::try_from(order).map_err(|e| loc.err(at, format!("{which}: {e}")))?;
        let steps = match (s.steps, s.total_steps) {
            (Some(n), None) => Steps::PerInterval(n),
            (None, Some(n)) => Steps::Total(n),
            _ => {
                return Err(loc.err(
                    at,
                    format!("`{which}` needs exactly one of `steps` (per interval) or `total_steps`"),
                ))
            }
        };
        if matches!(steps, Steps::PerInterval(0) | Steps::Total(0)) {
            return Err(loc.err(at, format!("`{which}` step count must be at least 1")));
        }
        Ok(SolverChoice { order, steps })
    };
    let coarse = solver_choice(coarse, "coarse")?;
    let fine = solver_choice(fine, "fine")?;

    let (corrector, corr_at) = corrector.unwrap_or_default();
    let kinds = corrector
        .kind
        .clone()
        .map(OneOrMany::into_vec)
        .unwrap_or_else(|| vec!["parareal".into()]);
    let ms = corrector.m.clone().map(OneOrMany::into_vec).unwrap_or_else(|| vec![15]);
    let strategies = match corrector.strategy.clone() {
        None => vec![SubsetStrategy::default()],
        Some(s) => s
            .into_vec()
            .iter()
            .map(|s| s.parse::<SubsetStrategy>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| loc.err(corr_at, format!("corrector: {e}")))?,
    };
    if kinds.is_empty() || ms.is_empty() || strategies.is_empty() {
        return Err(loc.err(corr_at, "corrector lists must be nonempty"));
    }
    if ms.contains(&0) {
        return Err(loc.err(corr_at, "`corrector.m` must be at least 1"));
    }
    let mut correctors = Vec::new();
    for kind in &kinds {
        match kind.as_str() {
            "parareal" => correctors.push(CorrectorKind::Parareal),
            "gparareal" => correctors.push(CorrectorKind::GParareal),
            "mnn_uniform" => correctors.extend(ms.iter().map(|&m| CorrectorKind::MnnUniform { m })),
            "nngparareal" => {
                for &m in &ms {
                    correctors.extend(strategies.iter().map(|&strategy| CorrectorKind::NnGParareal { m, strategy }));
                }
            }
            other => {
                return Err(loc.err(
                    corr_at,
                    format!("unknown corrector `{other}`; expected parareal, mnn_uniform, gparareal or nngparareal"),
                ))
            }
        }
    }

    let (gp, gp_at) = gp.unwrap_or_default();
    let mut fit = FitOptions::default();
    overlay_value(&mut fit.n_start, gp.n_start);
    overlay_value(&mut fit.nugget_grid, gp.nugget_grid);
    overlay_value(&mut fit.nelder_mead.max_iterations, gp.max_iterations);
    overlay_value(&mut fit.nelder_mead.f_tolerance, gp.f_tolerance);
    overlay_value(&mut fit.nelder_mead.initial_step, gp.initial_step);
    if let Some([lo, hi]) = gp.init_range {
        fit.init_range = (lo, hi);
    }
    if fit.n_start == 0 {
        return Err(loc.err(gp_at, "`gp.n_start` must be at least 1"));
    }
    if fit.nugget_grid.is_empty() || fit.nugget_grid.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
        return Err(loc.err(gp_at, "`gp.nugget_grid` must be a nonempty list of nonnegative values"));
    }
    let (lo, hi) = fit.init_range;
    if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(loc.err(gp_at, "`gp.init_range` must be [lo, hi] with lo ≤ hi"));
    }

    let (sweep, sweep_at) = sweep.unwrap_or_default();
    let seeds = sweep.seeds.clone().unwrap_or_else(|| vec![pint.seed.unwrap_or(0)]);
    if seeds.is_empty() {
        return Err(loc.err(sweep_at, "`sweep.seeds` is empty"));
    }
    for (key, list) in [("m", &sweep.m), ("coarse_steps", &sweep.coarse_steps)] {
        if let Some(list) = list {
            if list.is_empty() || list.contains(&0) {
                return Err(loc.err(sweep_at, format!("`sweep.{key}` must be a nonempty list of positive values")));
            }
        }
    }

    let label = over.label.clone().or_else(|| base.label.clone()).unwrap_or(name);
    if label.is_empty() || label.contains(['/', '\\']) {
        return Err(loc.err(block, format!("label `{label}` must be nonempty and contain no path separators")));
    }
    Ok(RunTemplate {
        label,
        system: choice,
        intervals,
        coarse,
        fine,
        correctors,
        epsilon,
        normalization,
        max_wallclock: pint.max_wallclock,
        divergence: pint.divergence.unwrap_or_default(),
        serial: pint.serial.unwrap_or_default(),
        gp: fit,
        seeds,
        sweep_m: sweep.m.clone(),
        sweep_coarse: sweep.coarse_steps.clone(),
        line: loc.line_col(block).0,
    })
}

fn overlay_value<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Experiment, ConfigError> {
        Experiment::parse(text, Path::new("t.cfg"))
    }

    const BASE: &str = r#"
system.name = "lorenz"
pint.N = [10, 20]
coarse = { order = 4, total_steps = 300 }
fine = { order = 4, steps = 100 }
corrector.kind = ["parareal", "nngparareal"]
corrector.m = [4, 6]
"#;

    #[test]
    fn top_level_defaults() {
        let exp = parse(BASE).unwrap();
        assert_eq!(exp.templates.len(), 1);
        let t = &exp.templates[0];
        assert_eq!(t.label, "lorenz");
        assert_eq!(t.intervals, vec![10, 20]);
        assert_eq!(t.coarse.steps.per_interval(20), 15);
        assert_eq!(t.coarse.steps.per_interval(7), 43);
        assert_eq!(t.correctors.len(), 3);
        assert_eq!(t.epsilon, 5e-7);
        assert_eq!(t.seeds, vec![0]);
        assert_eq!(t.normalization, Normalization::FromCoarse { margin: 0.1 });
    }

    #[test]
    fn run_blocks_override_fields() {
        let text = format!("{BASE}\n[[run]]\npint.N = 5\n\n[[run]]\nsystem.name = \"fhn\"\nfine = {{ steps = 7 }}\npint.seed = 4\n");
        let exp = parse(&text).unwrap();
        assert_eq!(exp.templates.len(), 2);
        assert_eq!(exp.templates[0].intervals, vec![5]);
        assert_eq!(exp.templates[0].system.name, "lorenz");
        let t = &exp.templates[1];
        assert_eq!(t.system.name, "fhn");
        assert_eq!(t.intervals, vec![10, 20]);
        assert_eq!(t.fine.order, RkOrder::Rk4);
        assert_eq!(t.fine.steps.per_interval(10), 7);
        assert_eq!(t.seeds, vec![4]);
        assert!(t.line > exp.templates[0].line);
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse(&format!("{BASE}\ngp.bogus = 1\n")).unwrap_err().to_string();
        assert!(e.starts_with("t.cfg:"), "{e}");
        let e = parse("system.name = \"lorenz\"\npint.N = 1\ncoarse = { order = 4, steps = 1 }\nfine = { order = 4, steps = 2 }\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("t.cfg:2:"), "{e}");
        for bad in [
            BASE.replace("order = 4, total_steps", "order = 3, total_steps"),
            BASE.replace("total_steps = 300", "total_steps = 300, steps = 2"),
            BASE.replace("corrector.m = [4, 6]", "corrector.m = 0"),
            BASE.replace("\"lorenz\"", "\"nope\""),
            format!("{BASE}\nlabel = \"a/b\"\n"),
            format!("{BASE}\nsweep.seeds = []\n"),
            format!("{BASE}\ncorrector.strategy = \"sideways\"\n"),
        ] {
            assert!(parse(&bad).is_err(), "{bad}");
        }
    }
}
