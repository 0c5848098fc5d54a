//! Fixed-step explicit Runge–Kutta integrators.
//!
//! Four methods are provided, addressed by their order: forward Euler, the
//! explicit midpoint rule, the classical fourth-order scheme, and the
//! twelve-stage eighth-order Dormand–Prince solution (the high-order half of
//! DOP853) run without error control.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Right-hand side `du/dt = h(t, u)` of a first-order system.
pub trait Rhs: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `h(t, u)` into `out`. Both slices have length [`Rhs::dim`].
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]);
}

impl<F> Rhs for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) {
        (self.1)(t, u, out)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegratorError {
    #[error("non-finite state at t = {t}")]
    Diverged { t: f64 },
    #[error("state has dimension {got}, system expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("empty or reversed time interval [{start}, {end}]")]
    BadInterval { start: f64, end: f64 },
    #[error("unsupported Runge-Kutta order {0}; expected 1, 2, 4 or 8")]
    UnsupportedOrder(u32),
    #[error("step count must be at least 1")]
    ZeroSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum RkOrder {
    Rk1,
    Rk2,
    Rk4,
    Rk8,
}

impl RkOrder {
    pub fn order(self) -> u32 {
        match self {
            RkOrder::Rk1 => 1,
            RkOrder::Rk2 => 2,
            RkOrder::Rk4 => 4,
            RkOrder::Rk8 => 8,
        }
    }

    fn tableau(self) -> &'static Tableau {
        match self {
            RkOrder::Rk1 => &EULER,
            RkOrder::Rk2 => &MIDPOINT,
            RkOrder::Rk4 => &CLASSIC4,
            RkOrder::Rk8 => &DOPRI8,
        }
    }

    pub fn stages(self) -> usize {
        self.tableau().b.len()
    }
}

impl TryFrom<u32> for RkOrder {
    type Error = IntegratorError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(RkOrder::Rk1),
            2 => Ok(RkOrder::Rk2),
            4 => Ok(RkOrder::Rk4),
            8 => Ok(RkOrder::Rk8),
            other => Err(IntegratorError::UnsupportedOrder(other)),
        }
    }
}

impl From<RkOrder> for u32 {
    fn from(value: RkOrder) -> Self {
        value.order()
    }
}

impl fmt::Display for RkOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RK{}", self.order())
    }
}

/// A solver used as either the coarse or the fine propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub order: RkOrder,
    pub steps_per_interval: usize,
}

impl SolverSpec {
    pub fn new(order: RkOrder, steps_per_interval: usize) -> Result<Self, IntegratorError> {
        if steps_per_interval == 0 {
            return Err(IntegratorError::ZeroSteps);
        }
        Ok(Self {
            order,
            steps_per_interval,
        })
    }
}

struct Tableau {
    c: &'static [f64],
    a: &'static [&'static [f64]],
    b: &'static [f64],
}

static EULER: Tableau = Tableau {
    c: &[0.0],
    a: &[&[]],
    b: &[1.0],
};

static MIDPOINT: Tableau = Tableau {
    c: &[0.0, 0.5],
    a: &[&[], &[0.5]],
    b: &[0.0, 1.0],
};

static CLASSIC4: Tableau = Tableau {
    c: &[0.0, 0.5, 0.5, 1.0],
    a: &[&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]],
    b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
};

#[allow(clippy::excessive_precision, clippy::unreadable_literal)]
static DOPRI8: Tableau = Tableau {
    c: &[
        0.0,
        0.05260015195876773,
        0.0789002279381516,
        0.1183503419072274,
        0.2816496580927726,
        0.3333333333333333,
        0.25,
        0.3076923076923077,
        0.6512820512820513,
        0.6,
        0.8571428571428571,
        1.0,
    ],
    a: &[
        &[],
        &[0.05260015195876773],
        &[0.0197250569845379, 0.0591751709536137],
        &[0.02958758547680685, 0.0, 0.08876275643042054],
        &[0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792],
        &[
            0.037037037037037035,
            0.0,
            0.0,
            0.17082860872947386,
            0.12546768756682242,
        ],
        &[
            0.037109375,
            0.0,
            0.0,
            0.17025221101954405,
            0.06021653898045596,
            -0.017578125,
        ],
        &[
            0.03709200011850479,
            0.0,
            0.0,
            0.17038392571223998,
            0.10726203044637328,
            -0.015319437748624402,
            0.008273789163814023,
        ],
        &[
            0.6241109587160757,
            0.0,
            0.0,
            -3.3608926294469414,
            -0.868219346841726,
            27.59209969944671,
            20.154067550477894,
            -43.48988418106996,
        ],
        &[
            0.47766253643826434,
            0.0,
            0.0,
            -2.4881146199716677,
            -0.590290826836843,
            21.230051448181193,
            15.279233632882423,
            -33.28821096898486,
            -0.020331201708508627,
        ],
        &[
            -0.9371424300859873,
            0.0,
            0.0,
            5.186372428844064,
            1.0914373489967295,
            -8.149787010746927,
            -18.52006565999696,
            22.739487099350505,
            2.4936055526796523,
            -3.0467644718982196,
        ],
        &[
            2.273310147516538,
            0.0,
            0.0,
            -10.53449546673725,
            -2.0008720582248625,
            -17.9589318631188,
            27.94888452941996,
            -2.8589982771350235,
            -8.87285693353063,
            12.360567175794303,
            0.6433927460157636,
        ],
    ],
    b: &[
        0.054293734116568765,
        0.0,
        0.0,
        0.0,
        0.0,
        4.450312892752409,
        1.8915178993145003,
        -5.801203960010585,
        0.3111643669578199,
        -0.1521609496625161,
        0.20136540080403034,
        0.04471061572777259,
    ],
};

/// Reusable stage storage for one system dimension and method.
pub struct Stepper {
    order: RkOrder,
    dim: usize,
    stages: Vec<f64>,
    probe: Vec<f64>,
}

impl Stepper {
    pub fn new(order: RkOrder, dim: usize) -> Self {
        Self {
            order,
            dim,
            stages: vec![0.0; order.stages() * dim],
            probe: vec![0.0; dim],
        }
    }

    /// Advances `u` in place by one step of size `dt` starting at time `t`.
    pub fn step(&mut self, rhs: &dyn Rhs, t: f64, dt: f64, u: &mut [f64]) {
        let tab = self.order.tableau();
        let d = self.dim;
        for s in 0..tab.b.len() {
            let (done, rest) = self.stages.split_at_mut(s * d);
            let row = tab.a[s];
            if row.iter().all(|&a| a == 0.0) {
                self.probe.copy_from_slice(u);
            } else {
                for (j, p) in self.probe.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (l, &a) in row.iter().enumerate() {
                        if a != 0.0 {
                            acc += a * done[l * d + j];
                        }
                    }
                    *p = u[j] + dt * acc;
                }
            }
            rhs.eval(t + tab.c[s] * dt, &self.probe, &mut rest[..d]);
        }
        for (j, x) in u.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (s, &b) in tab.b.iter().enumerate() {
                if b != 0.0 {
                    acc += b * self.stages[s * d + j];
                }
            }
            *x += dt * acc;
        }
    }
}

fn check_dim(rhs: &dyn Rhs, u: &[f64]) -> Result<(), IntegratorError> {
    if u.len() != rhs.dim() {
        return Err(IntegratorError::Dimension {
            expected: rhs.dim(),
            got: u.len(),
        });
    }
    Ok(())
}

/// One explicit Runge–Kutta step of the given order.
pub fn rk_step(
    order: RkOrder,
    rhs: &dyn Rhs,
    u: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<f64>, IntegratorError> {
    check_dim(rhs, u)?;
    let mut out = u.to_vec();
    Stepper::new(order, u.len()).step(rhs, t, dt, &mut out);
    if out.iter().all(|x| x.is_finite()) {
        Ok(out)
    } else {
        Err(IntegratorError::Diverged { t: t + dt })
    }
}

/// Propagates `u0` from `t_start` to `t_end` with `spec.steps_per_interval`
/// equal steps.
pub fn integrate_interval(
    spec: &SolverSpec,
    rhs: &dyn Rhs,
    u0: &[f64],
    t_start: f64,
    t_end: f64,
) -> Result<Vec<f64>, IntegratorError> {
    check_dim(rhs, u0)?;
    if !(t_end > t_start) {
        return Err(IntegratorError::BadInterval {
            start: t_start,
            end: t_end,
        });
    }
    if spec.steps_per_interval == 0 {
        return Err(IntegratorError::ZeroSteps);
    }
    let n = spec.steps_per_interval;
    let dt = (t_end - t_start) / n as f64;
    let mut u = u0.to_vec();
    let mut stepper = Stepper::new(spec.order, u.len());
    for step in 0..n {
        stepper.step(rhs, t_start + step as f64 * dt, dt, &mut u);
    }
    if u.iter().all(|x| x.is_finite()) {
        Ok(u)
    } else {
        Err(IntegratorError::Diverged { t: t_end })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn growth() -> (usize, impl Fn(f64, &[f64], &mut [f64]) + Send + Sync) {
        (1, |_t: f64, u: &[f64], out: &mut [f64]| out[0] = u[0])
    }

    fn zero(d: usize) -> (usize, impl Fn(f64, &[f64], &mut [f64]) + Send + Sync) {
        (d, |_t: f64, _u: &[f64], out: &mut [f64]| out.fill(0.0))
    }

    #[test]
    fn tableaux_are_consistent() {
        for order in [RkOrder::Rk1, RkOrder::Rk2, RkOrder::Rk4, RkOrder::Rk8] {
            let tab = order.tableau();
            let sum_b: f64 = tab.b.iter().sum();
            assert!((sum_b - 1.0).abs() < 1e-14, "{order}: sum b = {sum_b}");
            for (s, row) in tab.a.iter().enumerate() {
                assert_eq!(row.len(), s);
                let sum_a: f64 = row.iter().sum();
                assert!((sum_a - tab.c[s]).abs() < 1e-13, "{order} row {s}");
            }
        }
    }

    #[test]
    fn zero_field_leaves_state_unchanged() {
        let rhs = zero(3);
        let u = [1.5, -2.0, 1e-300];
        for order in [RkOrder::Rk1, RkOrder::Rk2, RkOrder::Rk4, RkOrder::Rk8] {
            assert_eq!(rk_step(order, &rhs, &u, 0.3, 0.7).unwrap(), u);
            let spec = SolverSpec::new(order, 17).unwrap();
            assert_eq!(integrate_interval(&spec, &rhs, &u, 0.0, 5.0).unwrap(), u);
        }
    }

    #[test]
    fn rk4_exponential() {
        let spec = SolverSpec::new(RkOrder::Rk4, 1000).unwrap();
        let u = integrate_interval(&spec, &growth(), &[1.0], 0.0, 1.0).unwrap();
        assert!((u[0] - core::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn euler_matches_product_formula() {
        let spec = SolverSpec::new(RkOrder::Rk1, 10).unwrap();
        let u = integrate_interval(&spec, &growth(), &[1.0], 0.0, 1.0).unwrap();
        let exact = libm::pow(1.1, 10.0);
        assert!((u[0] - exact).abs() < 1e-14);
    }

    #[test]
    fn blow_up_is_reported() {
        let rhs = (1, |_t: f64, u: &[f64], out: &mut [f64]| out[0] = u[0] * u[0]);
        let spec = SolverSpec::new(RkOrder::Rk1, 200).unwrap();
        let err = integrate_interval(&spec, &rhs, &[1.0], 0.0, 10.0).unwrap_err();
        assert!(matches!(err, IntegratorError::Diverged { .. }));
    }

    #[test]
    fn rejects_bad_input() {
        let spec = SolverSpec::new(RkOrder::Rk2, 4).unwrap();
        assert!(matches!(
            integrate_interval(&spec, &growth(), &[1.0, 2.0], 0.0, 1.0),
            Err(IntegratorError::Dimension { .. })
        ));
        assert!(matches!(
            integrate_interval(&spec, &growth(), &[1.0], 1.0, 1.0),
            Err(IntegratorError::BadInterval { .. })
        ));
        assert_eq!(SolverSpec::new(RkOrder::Rk2, 0), Err(IntegratorError::ZeroSteps));
        assert_eq!(RkOrder::try_from(3), Err(IntegratorError::UnsupportedOrder(3)));
    }
}
