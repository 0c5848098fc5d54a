//! Named systems as they appear in experiment files.

use std::f64::consts::PI;

use pint_core::systems::{
    discretize_burgers, discretize_fhn2d, discretize_heat, make_ode_system, Fhn2dParams, SystemDefinition,
    SystemError, ODE_SYSTEM_NAMES,
};
use serde::{Deserialize, Serialize};

pub const PDE_SYSTEM_NAMES: [&str; 3] = ["heat", "burgers", "fhn2d"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemChoice {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub u0: Option<Vec<f64>>,
}

impl SystemChoice {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            params: Vec::new(),
            t_start: None,
            t_end: None,
            u0: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.push((key.into(), value));
        self
    }

    /// Builds the system. `seed` only matters for randomly initialised
    /// systems, and is overridden by an explicit `ic_seed` parameter.
    pub fn build(&self, seed: u64) -> Result<SystemDefinition, SystemError> {
        let sys = if ODE_SYSTEM_NAMES.contains(&self.name.as_str()) {
            let params: Vec<(&str, f64)> = self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            make_ode_system(&self.name, &params)?
        } else {
            self.build_pde(seed)?
        };
        let (t0, t1) = (self.t_start.unwrap_or(sys.t_start), self.t_end.unwrap_or(sys.t_end));
        let sys = if (t0, t1) != (sys.t_start, sys.t_end) {
            sys.with_span(t0, t1)?
        } else {
            sys
        };
        match &self.u0 {
            Some(u0) => sys.with_initial_condition(u0.clone()),
            None => Ok(sys),
        }
    }

    fn build_pde(&self, seed: u64) -> Result<SystemDefinition, SystemError> {
        let allowed: &[&str] = match self.name.as_str() {
            "heat" => &["d", "L", "alpha"],
            "burgers" => &["d", "L", "nu"],
            "fhn2d" => &["d_tilde", "L", "a", "b", "c", "tau", "ic_seed"],
            other => return Err(SystemError::UnknownSystem(other.into())),
        };
        for (k, _) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(SystemError::UnknownParameter {
                    system: self.name.clone(),
                    param: k.clone(),
                });
            }
        }
        let get = |k: &str| self.params.iter().rev().find(|(p, _)| p == k).map(|&(_, v)| v);
        let count = |k: &str, default: f64| -> Result<usize, SystemError> {
            let v = get(k).unwrap_or(default);
            if v.fract() != 0.0 || v < 1.0 {
                return Err(SystemError::InvalidParameter {
                    param: k.into(),
                    value: v,
                    reason: "must be a positive integer",
                });
            }
            Ok(v as usize)
        };
        match self.name.as_str() {
            "heat" => discretize_heat(
                count("d", 40.0)?,
                get("L").unwrap_or(1.0),
                get("alpha").unwrap_or(0.1),
                &|x| (2.0 * PI * x).sin(),
            ),
            "burgers" => discretize_burgers(
                count("d", 128.0)?,
                get("L").unwrap_or(1.0),
                get("nu").unwrap_or(0.01),
                &|x| 0.5 * ((4.5 * PI * x).cos() + 1.0),
            ),
            _ => {
                let required = |k: &str| {
                    get(k).ok_or_else(|| SystemError::InvalidParameter {
                        param: k.into(),
                        value: f64::NAN,
                        reason: "required for fhn2d",
                    })
                };
                let params = Fhn2dParams {
                    a: required("a")?,
                    b: required("b")?,
                    c: required("c")?,
                    tau: required("tau")?,
                };
                let ic_seed = match get("ic_seed") {
                    Some(s) if s >= 0.0 && s.fract() == 0.0 => s as u64,
                    Some(s) => {
                        return Err(SystemError::InvalidParameter {
                            param: "ic_seed".into(),
                            value: s,
                            reason: "must be a nonnegative integer",
                        })
                    }
                    None => seed,
                };
                discretize_fhn2d(count("d_tilde", 10.0)?, get("L").unwrap_or(1.0), params, ic_seed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_every_name() {
        for name in ODE_SYSTEM_NAMES {
            assert!(SystemChoice::named(name).build(0).is_ok(), "{name}");
        }
        assert_eq!(SystemChoice::named("heat").build(0).unwrap().dim(), 40);
        assert_eq!(SystemChoice::named("burgers").build(0).unwrap().dim(), 128);
        let fhn2d = SystemChoice::named("fhn2d")
            .with_param("a", 2.8e-4)
            .with_param("b", 5e-3)
            .with_param("c", -5e-3)
            .with_param("tau", 0.1);
        assert_eq!(fhn2d.build(0).unwrap().dim(), 200);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SystemChoice::named("nope").build(0).is_err());
        assert!(SystemChoice::named("heat").with_param("nu", 1.0).build(0).is_err());
        assert!(SystemChoice::named("heat").with_param("d", 2.5).build(0).is_err());
        assert!(SystemChoice::named("fhn2d").build(0).is_err());
        let mut c = SystemChoice::named("fhn");
        c.u0 = Some(vec![1.0]);
        assert!(c.build(0).is_err());
    }

    #[test]
    fn span_override() {
        let mut c = SystemChoice::named("lorenz");
        c.t_end = Some(2.0);
        let s = c.build(0).unwrap();
        assert_eq!((s.t_start, s.t_end), (0.0, 2.0));
    }
}
