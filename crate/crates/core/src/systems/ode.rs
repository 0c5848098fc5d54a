use alloc::sync::Arc;
use alloc::vec;

use libm::{cos, sin};

use super::{named, require_positive, resolve_params, SystemDefinition, SystemError};
use crate::integrator::Rhs;

/// Names accepted by [`make_ode_system`].
pub const ODE_SYSTEM_NAMES: [&str; 7] = [
    "fhn",
    "rossler",
    "hopf",
    "brusselator",
    "lorenz",
    "double_pendulum",
    "thomas",
];

/// FitzHugh–Nagumo nerve-axon model.
#[derive(Debug, Clone, Copy)]
pub struct FitzHughNagumo {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Rhs for FitzHughNagumo {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let (v, w) = (u[0], u[1]);
        out[0] = self.c * (v - v * v * v / 3.0 + w);
        out[1] = -(v - self.a + self.b * w) / self.c;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rossler {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Rhs for Rossler {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        out[0] = -u[1] - u[2];
        out[1] = u[0] + self.a * u[1];
        out[2] = self.b + u[2] * (u[0] - self.c);
    }
}

/// Non-autonomous Hopf normal form with slowly ramped bifurcation parameter
/// `t / T`. The third coordinate is a clock (`du3/dt = 1`), so the state
/// carries time and the correction terms become functions of the state alone.
#[derive(Debug, Clone, Copy)]
pub struct Hopf {
    pub ramp: f64,
}

impl Rhs for Hopf {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let growth = t / self.ramp - u[0] * u[0] - u[1] * u[1];
        out[0] = -u[1] + u[0] * growth;
        out[1] = u[0] + u[1] * growth;
        out[2] = 1.0;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Brusselator {
    pub a: f64,
    pub b: f64,
}

impl Rhs for Brusselator {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let sq = u[0] * u[0] * u[1];
        out[0] = self.a + sq - (self.b + 1.0) * u[0];
        out[1] = self.b * u[0] - sq;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Lorenz {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Rhs for Lorenz {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        out[0] = self.sigma * (u[1] - u[0]);
        out[1] = self.rho * u[0] - u[0] * u[2] - u[1];
        out[2] = u[0] * u[1] - self.beta * u[2];
    }
}

/// Equal-mass, equal-length double pendulum with `l = g` scaled out.
#[derive(Debug, Clone, Copy)]
pub struct DoublePendulum;

impl Rhs for DoublePendulum {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let delta = u[0] - u[1];
        let (s, c) = (sin(delta), cos(delta));
        let f1 = s * c;
        let f2 = 2.0 - c * c;
        let (w1, w2) = (u[2] * u[2], u[3] * u[3]);
        out[0] = u[2];
        out[1] = u[3];
        out[2] = (-w1 * f1 - w2 * s - 2.0 * sin(u[0]) + c * sin(u[1])) / f2;
        out[3] = (2.0 * w1 * s + w2 * f1 + 2.0 * c * sin(u[0]) - 2.0 * sin(u[1])) / f2;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ThomasLabyrinth {
    pub a: f64,
    pub b: f64,
}

impl Rhs for ThomasLabyrinth {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        out[0] = self.b * sin(u[1]) - self.a * u[0];
        out[1] = self.b * sin(u[2]) - self.a * u[1];
        out[2] = self.b * sin(u[0]) - self.a * u[2];
    }
}

/// Builds one of the benchmark ODE systems with its default initial condition
/// and time span. `params` overrides individual named parameters.
pub fn make_ode_system(name: &str, params: &[(&str, f64)]) -> Result<SystemDefinition, SystemError> {
    match name {
        "fhn" => {
            let keys = [("a", 0.2), ("b", 0.2), ("c", 3.0)];
            let [a, b, c] = resolve_params(name, keys, params)?;
            require_positive("c", c)?;
            SystemDefinition::new(
                name,
                Arc::new(FitzHughNagumo { a, b, c }),
                vec![-1.0, 1.0],
                (0.0, 40.0),
                named(&["a", "b", "c"], &[a, b, c]),
            )
        }
        "rossler" => {
            let keys = [("a", 0.2), ("b", 0.2), ("c", 5.7)];
            let [a, b, c] = resolve_params(name, keys, params)?;
            for (k, v) in [("a", a), ("b", b), ("c", c)] {
                require_positive(k, v)?;
            }
            SystemDefinition::new(
                name,
                Arc::new(Rossler { a, b, c }),
                vec![0.0, -6.78, 0.02],
                (0.0, 340.0),
                named(&["a", "b", "c"], &[a, b, c]),
            )
        }
        "hopf" => {
            let [ramp] = resolve_params(name, [("T", 500.0)], params)?;
            require_positive("T", ramp)?;
            SystemDefinition::new(
                name,
                Arc::new(Hopf { ramp }),
                vec![0.1, 0.1, 500.0],
                (-20.0, 500.0),
                named(&["T"], &[ramp]),
            )
        }
        "brusselator" => {
            let [a, b] = resolve_params(name, [("a", 1.0), ("b", 3.0)], params)?;
            require_positive("a", a)?;
            require_positive("b", b)?;
            SystemDefinition::new(
                name,
                Arc::new(Brusselator { a, b }),
                vec![1.0, 3.7],
                (0.0, 100.0),
                named(&["a", "b"], &[a, b]),
            )
        }
        "lorenz" => {
            let keys = [("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)];
            let [sigma, rho, beta] = resolve_params(name, keys, params)?;
            for (k, v) in [("sigma", sigma), ("rho", rho), ("beta", beta)] {
                require_positive(k, v)?;
            }
            SystemDefinition::new(
                name,
                Arc::new(Lorenz { sigma, rho, beta }),
                vec![-15.0, -15.0, 20.0],
                (0.0, 18.0),
                named(&["sigma", "rho", "beta"], &[sigma, rho, beta]),
            )
        }
        "double_pendulum" => {
            resolve_params(name, [], params)?;
            SystemDefinition::new(
                name,
                Arc::new(DoublePendulum),
                vec![-0.5, 0.0, 0.0, 0.0],
                (0.0, 80.0),
                vec![],
            )
        }
        "thomas" => {
            let [a, b] = resolve_params(name, [("a", 0.5), ("b", 10.0)], params)?;
            require_positive("a", a)?;
            require_positive("b", b)?;
            SystemDefinition::new(
                name,
                Arc::new(ThomasLabyrinth { a, b }),
                vec![4.6722764, 5.2437205e-10, -6.4444208e-10],
                (0.0, 10.0),
                named(&["a", "b"], &[a, b]),
            )
        }
        other => Err(SystemError::UnknownSystem(other.into())),
    }
}
