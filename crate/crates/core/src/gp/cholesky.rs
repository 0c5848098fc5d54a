use alloc::vec::Vec;

/// Lower-triangular factor `L` of a symmetric positive-definite matrix,
/// stored densely row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Factorizes the lower triangle of `a` (row-major `n × n`) in place.
/// Returns `false` when a pivot is not strictly positive and finite.
pub fn factor_in_place(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        let (done, row_i) = a.split_at_mut(i * n);
        let row_i = &mut row_i[..n];
        for j in 0..i {
            let row_j = &done[j * n..j * n + j + 1];
            row_i[j] = (row_i[j] - dot(&row_i[..j], &row_j[..j])) / row_j[j];
        }
        let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
        if !(d > 0.0 && d.is_finite()) {
            return false;
        }
        row_i[i] = libm::sqrt(d);
    }
    true
}

/// Solves `L z = b` in place given the factor in the lower triangle of `l`.
pub fn forward_in_place(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        b[i] = (b[i] - dot(row, &b[..i])) / l[i * n + i];
    }
}

/// Solves `Lᵀ x = z` in place.
pub fn backward_in_place(l: &[f64], n: usize, z: &mut [f64]) {
    for i in (0..n).rev() {
        let xi = z[i] / l[i * n + i];
        z[i] = xi;
        for k in 0..i {
            z[k] -= l[i * n + k] * xi;
        }
    }
}

impl Cholesky {
    /// Factorizes a symmetric positive-definite matrix. Only the lower
    /// triangle of `a` is read.
    pub fn new(mut a: Vec<f64>, n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n, "matrix must be n × n");
        if !factor_in_place(&mut a, n) {
            return None;
        }
        for i in 0..n {
            for j in i + 1..n {
                a[i * n + j] = 0.0;
            }
        }
        Some(Self { n, l: a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> &[f64] {
        &self.l
    }

    pub fn forward(&self, b: &mut [f64]) {
        forward_in_place(&self.l, self.n, b);
    }

    /// `A⁻¹ b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        forward_in_place(&self.l, self.n, b);
        backward_in_place(&self.l, self.n, b);
    }

    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| libm::log(self.l[i * self.n + i]))
            .sum::<f64>()
            * 2.0
    }
}
