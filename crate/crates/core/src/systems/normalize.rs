use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{SystemDefinition, SystemError};
use crate::integrator::Rhs;

/// Per-coordinate affine map `u ↦ 2(u − lo)/(hi − lo) − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationMap {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl NormalizationMap {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SystemError> {
        if lo.len() != hi.len() {
            return Err(SystemError::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (coord, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && h > l) {
                return Err(SystemError::DegenerateBounds { coord, lo: l, hi: h });
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[-1, 1]` in every coordinate.
    pub fn identity(dim: usize) -> Self {
        Self {
            lo: alloc::vec![-1.0; dim],
            hi: alloc::vec![1.0; dim],
        }
    }

    /// Bounding box of `samples`, widened by `margin` times its extent on
    /// each side. A coordinate that never varies gets a box of half-width
    /// `max(|value|, 1)`.
    pub fn from_samples_with_margin<'a, I>(samples: I, margin: f64) -> Result<Self, SystemError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = samples.into_iter();
        let first = iter.next().ok_or(SystemError::Dimension {
            expected: 1,
            got: 0,
        })?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for s in iter {
            if s.len() != lo.len() {
                return Err(SystemError::Dimension {
                    expected: lo.len(),
                    got: s.len(),
                });
            }
            for (j, &x) in s.iter().enumerate() {
                lo[j] = lo[j].min(x);
                hi[j] = hi[j].max(x);
            }
        }
        for j in 0..lo.len() {
            let width = hi[j] - lo[j];
            if width > 0.0 {
                lo[j] -= margin * width;
                hi[j] += margin * width;
            } else {
                let half = lo[j].abs().max(1.0);
                let centre = lo[j];
                lo[j] = centre - half;
                hi[j] = centre + half;
            }
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn to_normalized(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&l, &h))| 2.0 * (x - l) / (h - l) - 1.0)
            .collect()
    }

    pub fn to_physical(&self, z: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; z.len()];
        self.to_physical_into(z, &mut out);
        out
    }

    fn to_physical_into(&self, z: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let (l, h) = (self.lo[j], self.hi[j]);
            *o = l + (z[j] + 1.0) * (h - l) * 0.5;
        }
    }
}

/// `dz/dt = 2/(hi − lo) ⊙ h(t, u(z))`.
#[derive(Clone)]
pub struct NormalizedRhs {
    inner: Arc<dyn Rhs>,
    map: NormalizationMap,
    scale: Vec<f64>,
}

impl NormalizedRhs {
    pub fn new(inner: Arc<dyn Rhs>, map: NormalizationMap) -> Result<Self, SystemError> {
        if map.dim() != inner.dim() {
            return Err(SystemError::Dimension {
                expected: inner.dim(),
                got: map.dim(),
            });
        }
        let scale = map
            .lo
            .iter()
            .zip(&map.hi)
            .map(|(l, h)| 2.0 / (h - l))
            .collect();
        Ok(Self { inner, map, scale })
    }
}

impl Rhs for NormalizedRhs {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, t: f64, z: &[f64], out: &mut [f64]) {
        let mut u = alloc::vec![0.0; z.len()];
        self.map.to_physical_into(z, &mut u);
        self.inner.eval(t, &u, out);
        for (o, s) in out.iter_mut().zip(&self.scale) {
            *o *= s;
        }
    }
}

/// Re-expresses `system` in normalized coordinates.
pub fn normalize_system(
    system: &SystemDefinition,
    bounds: NormalizationMap,
) -> Result<SystemDefinition, SystemError> {
    let rhs = NormalizedRhs::new(system.rhs.clone(), bounds.clone())?;
    let u0 = bounds.to_normalized(&system.initial_condition);
    let mut out = SystemDefinition::new(
        system.name.clone(),
        Arc::new(rhs),
        u0,
        (system.t_start, system.t_end),
        system.parameters.clone(),
    )?;
    out.normalization = Some(bounds);
    Ok(out)
}
