//! Method-of-lines discretizations.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use super::{named, require_positive, SystemDefinition, SystemError};
use crate::integrator::Rhs;
use crate::rng::{keyed_rng, stream::INITIAL_CONDITION};

fn require_dim(param: &str, value: usize, min: usize) -> Result<(), SystemError> {
    if value >= min {
        Ok(())
    } else {
        Err(SystemError::InvalidParameter {
            param: param.into(),
            value: value as f64,
            reason: "grid too small",
        })
    }
}

/// 1-D heat equation on `(0, L)` with homogeneous Dirichlet boundaries.
///
/// The `d` unknowns sit at the interior nodes `x_j = j·Δx`, `j = 1..=d`,
/// with `Δx = L/(d+1)`.
#[derive(Debug, Clone)]
pub struct Heat1d {
    pub d: usize,
    pub length: f64,
    pub alpha: f64,
}

impl Heat1d {
    pub fn dx(&self) -> f64 {
        self.length / (self.d + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.dx();
        (1..=self.d).map(|j| j as f64 * dx).collect()
    }
}

impl Rhs for Heat1d {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let dx = self.dx();
        let c = self.alpha / (dx * dx);
        let n = self.d;
        for j in 0..n {
            let left = if j == 0 { 0.0 } else { u[j - 1] };
            let right = if j + 1 == n { 0.0 } else { u[j + 1] };
            out[j] = c * (left - 2.0 * u[j] + right);
        }
    }
}

/// Heat equation on `(0, L)`, span `[0, 2]`.
pub fn discretize_heat(
    d: usize,
    length: f64,
    alpha: f64,
    u0_profile: &dyn Fn(f64) -> f64,
) -> Result<SystemDefinition, SystemError> {
    require_dim("d", d, 2)?;
    require_positive("L", length)?;
    require_positive("alpha", alpha)?;
    let rhs = Heat1d { d, length, alpha };
    let u0 = rhs.nodes().into_iter().map(u0_profile).collect();
    SystemDefinition::new(
        "heat",
        Arc::new(rhs),
        u0,
        (0.0, 2.0),
        named(&["d", "L", "alpha"], &[d as f64, length, alpha]),
    )
}

/// Viscous Burgers' equation `v_t = ν v_xx − v v_x` on `[−L, L]` with
/// `v(−L) = v(L)` imposed as a periodic wrap. Unknowns at
/// `x_j = −L + j·Δx`, `j = 0..d`, `Δx = 2L/d`.
#[derive(Debug, Clone)]
pub struct Burgers1d {
    pub d: usize,
    pub length: f64,
    pub nu: f64,
}

impl Burgers1d {
    pub fn dx(&self) -> f64 {
        2.0 * self.length / self.d as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.d).map(|j| -self.length + j as f64 * dx).collect()
    }
}

impl Rhs for Burgers1d {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, _t: f64, v: &[f64], out: &mut [f64]) {
        let n = self.d;
        let dx = self.dx();
        let diff = self.nu / (dx * dx);
        let adv = 0.5 / dx;
        for j in 0..n {
            let l = v[(j + n - 1) % n];
            let r = v[(j + 1) % n];
            out[j] = diff * (l - 2.0 * v[j] + r) - v[j] * adv * (r - l);
        }
    }
}

/// Burgers' equation with span `[0, 5]`.
pub fn discretize_burgers(
    d: usize,
    length: f64,
    nu: f64,
    v0_profile: &dyn Fn(f64) -> f64,
) -> Result<SystemDefinition, SystemError> {
    require_dim("d", d, 3)?;
    require_positive("L", length)?;
    require_positive("nu", nu)?;
    let rhs = Burgers1d { d, length, nu };
    let v0 = rhs.nodes().into_iter().map(v0_profile).collect();
    SystemDefinition::new(
        "burgers",
        Arc::new(rhs),
        v0,
        (0.0, 5.0),
        named(&["d", "L", "nu"], &[d as f64, length, nu]),
    )
}

/// Parameters of the 2-D FitzHugh–Nagumo reaction–diffusion model. None
/// have defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fhn2dParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub tau: f64,
}

/// 2-D FitzHugh–Nagumo on `[−L, L]²` with periodic boundaries in both
/// directions, `d̃` points per axis and spacing `2L/d̃`. The state holds the
/// `v` field followed by the `w` field, each row-major (`iy·d̃ + ix`).
#[derive(Debug, Clone)]
pub struct Fhn2d {
    pub d_tilde: usize,
    pub length: f64,
    pub params: Fhn2dParams,
}

impl Fhn2d {
    pub fn h(&self) -> f64 {
        2.0 * self.length / self.d_tilde as f64
    }

    fn laplacian(&self, field: &[f64], out: &mut [f64]) {
        let n = self.d_tilde;
        let h = self.h();
        let inv = 1.0 / (h * h);
        for iy in 0..n {
            let up = ((iy + 1) % n) * n;
            let down = ((iy + n - 1) % n) * n;
            let row = iy * n;
            for ix in 0..n {
                let e = (ix + 1) % n;
                let w = (ix + n - 1) % n;
                let centre = field[row + ix];
                out[row + ix] = inv
                    * (field[row + e] + field[row + w] + field[up + ix] + field[down + ix]
                        - 4.0 * centre);
            }
        }
    }
}

impl Rhs for Fhn2d {
    fn dim(&self) -> usize {
        2 * self.d_tilde * self.d_tilde
    }

    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        let cells = self.d_tilde * self.d_tilde;
        let (v, w) = u.split_at(cells);
        let (dv, dw) = out.split_at_mut(cells);
        self.laplacian(v, dv);
        self.laplacian(w, dw);
        let p = self.params;
        for j in 0..cells {
            let vj = v[j];
            dv[j] = p.a * dv[j] + vj - vj * vj * vj - w[j] - p.c;
            dw[j] = p.tau * (p.b * dw[j] + vj - w[j]);
        }
    }
}

/// Default final time for the supported grid sizes.
pub fn fhn2d_default_t_end(d_tilde: usize) -> Option<f64> {
    match d_tilde {
        10 => Some(150.0),
        12 => Some(550.0),
        14 => Some(950.0),
        16 => Some(1100.0),
        _ => None,
    }
}

/// 2-D FitzHugh–Nagumo with an initial state drawn uniformly from `[0, 1]^d`
/// using a stream keyed on `seed`.
pub fn discretize_fhn2d(
    d_tilde: usize,
    length: f64,
    params: Fhn2dParams,
    seed: u64,
) -> Result<SystemDefinition, SystemError> {
    require_dim("d_tilde", d_tilde, 3)?;
    require_positive("L", length)?;
    for (k, v) in [("a", params.a), ("b", params.b), ("tau", params.tau)] {
        require_positive(k, v)?;
    }
    if !params.c.is_finite() {
        return Err(SystemError::InvalidParameter {
            param: "c".into(),
            value: params.c,
            reason: "must be finite",
        });
    }
    let t_end = fhn2d_default_t_end(d_tilde).unwrap_or(100.0);
    let rhs = Fhn2d {
        d_tilde,
        length,
        params,
    };
    let mut rng = keyed_rng(seed, &[INITIAL_CONDITION, d_tilde as u64]);
    let u0 = (0..rhs.dim()).map(|_| rng.random::<f64>()).collect();
    SystemDefinition::new(
        "fhn2d",
        Arc::new(rhs),
        u0,
        (0.0, t_end),
        named(
            &["d_tilde", "L", "a", "b", "c", "tau"],
            &[
                d_tilde as f64,
                length,
                params.a,
                params.b,
                params.c,
                params.tau,
            ],
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn heat_zero_is_stationary() {
        let sys = discretize_heat(40, 1.0, 0.1, &|_| 0.0).unwrap();
        let mut out = vec![1.0; 40];
        sys.rhs.eval(0.0, &[0.0; 40], &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn heat_sine_is_an_eigenvector() {
        let heat = Heat1d {
            d: 40,
            length: 1.0,
            alpha: 0.1,
        };
        let dx = heat.dx();
        let u: Vec<f64> = heat
            .nodes()
            .iter()
            .map(|x| libm::sin(2.0 * core::f64::consts::PI * x))
            .collect();
        let mut out = vec![0.0; 40];
        heat.eval(0.0, &u, &mut out);
        let s = libm::sin(core::f64::consts::PI * dx);
        let lambda = -4.0 * 0.1 / (dx * dx) * s * s;
        for (o, x) in out.iter().zip(&u) {
            assert!((o - lambda * x).abs() < 1e-11);
        }
    }

    #[test]
    fn burgers_constant_profile_is_stationary() {
        let sys = discretize_burgers(16, 1.0, 0.01, &|_| 0.3).unwrap();
        let mut out = vec![1.0; 16];
        sys.rhs.eval(0.0, &sys.initial_condition, &mut out);
        assert!(out.iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn fhn2d_dimensions_and_constant_fields() {
        let p = Fhn2dParams {
            a: 1.0,
            b: 2.0,
            c: 0.1,
            tau: 0.5,
        };
        for (dt, d) in [(10, 200), (12, 288), (14, 392), (16, 512)] {
            let sys = discretize_fhn2d(dt, 1.0, p, 1).unwrap();
            assert_eq!(sys.dim(), d);
            assert!(sys.initial_condition.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
        let rhs = Fhn2d {
            d_tilde: 4,
            length: 1.0,
            params: p,
        };
        let mut u = vec![0.5; 16];
        u.extend([0.25; 16]);
        let mut out = vec![0.0; 32];
        rhs.eval(0.0, &u, &mut out);
        let dv = 0.5 - 0.125 - 0.25 - 0.1;
        let dw = 0.5 * (0.5 - 0.25);
        assert!(out[..16].iter().all(|&x| (x - dv).abs() < 1e-14));
        assert!(out[16..].iter().all(|&x| (x - dw).abs() < 1e-14));
    }

    #[test]
    fn fhn2d_initial_condition_follows_seed() {
        let p = Fhn2dParams {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            tau: 1.0,
        };
        let a = discretize_fhn2d(10, 1.0, p, 7).unwrap();
        let b = discretize_fhn2d(10, 1.0, p, 7).unwrap();
        let c = discretize_fhn2d(10, 1.0, p, 8).unwrap();
        assert_eq!(a.initial_condition, b.initial_condition);
        assert_ne!(a.initial_condition, c.initial_condition);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(discretize_heat(1, 1.0, 0.1, &|_| 0.0).is_err());
        assert!(discretize_burgers(128, 1.0, -1.0, &|_| 0.0).is_err());
    }
}
