//! Derivative-free simplex minimization.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once `f_worst − f_best` falls to this value.
    pub f_tolerance: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            f_tolerance: 1e-6,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-finite values of `f` are treated as `+∞`,
/// so the simplex retreats from regions where the objective is undefined.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for j in 0..n {
        let mut p = x0.to_vec();
        p[j] += opts.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let spread = vals[worst] - vals[best];
        if vals[best] == f64::INFINITY {
            break;
        }
        if spread <= opts.f_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let along = |t: f64, out: &mut [f64], w: &[f64], c: &[f64]| {
            for j in 0..n {
                out[j] = c[j] + t * (w[j] - c[j]);
            }
        };
        along(-1.0, &mut trial, &pts[worst], &centroid);
        let fr = eval(&trial);
        if fr < vals[best] {
            along(-2.0, &mut trial2, &pts[worst], &centroid);
            let fe = eval(&trial2);
            if fe < fr {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = fr;
            continue;
        }
        let (t, bound) = if fr < vals[worst] {
            (-0.5, fr)
        } else {
            (0.5, vals[worst])
        };
        along(t, &mut trial2, &pts[worst], &centroid);
        let fc = eval(&trial2);
        if fc < bound || (fc == bound && fc.is_finite()) {
            pts[worst].copy_from_slice(&trial2);
            vals[worst] = fc;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + 0.5 * (*x - a);
            }
            vals[i] = eval(&pts[i]);
        }
    }
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    Minimum {
        x: pts[order[0]].clone(),
        f: vals[order[0]],
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = minimize(
            |x| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &NelderMeadOptions {
                max_iterations: 500,
                f_tolerance: 1e-14,
                initial_step: 1.0,
            },
        );
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-5 && (m.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock() {
        let m = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &NelderMeadOptions {
                max_iterations: 2000,
                f_tolerance: 1e-16,
                initial_step: 0.5,
            },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn avoids_undefined_region() {
        let m = minimize(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) },
            &[2.0],
            &NelderMeadOptions::default(),
        );
        assert!((m.x[0] - 0.5).abs() < 1e-2);
        assert!(m.f.is_finite());
    }

    #[test]
    fn respects_iteration_cap() {
        let m = minimize(
            |x| x[0].abs().sqrt(),
            &[100.0],
            &NelderMeadOptions {
                max_iterations: 3,
                f_tolerance: 0.0,
                initial_step: 1.0,
            },
        );
        assert_eq!(m.iterations, 3);
        assert!(!m.converged);
    }
}
