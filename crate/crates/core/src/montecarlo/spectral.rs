//! Largest singular value of a complex channel matrix by power iteration.

use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// # Panics
    /// If `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self::from_row_major(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// `||H||_F^2`, the sum of the squared singular values.
    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|h| h.norm_sqr()).sum()
    }

    /// Gram matrix on the smaller side: `H^H H` if `cols <= rows`, else `H H^H`.
    ///
    /// Both share the nonzero eigenvalues `sigma_i^2`.
    pub fn gram_small_side(&self) -> ComplexMatrix {
        let (k, inner) = if self.cols <= self.rows {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        };
        let at = |i: usize, l: usize| -> Complex64 {
            // column i of H, or row i of H^T
            if self.cols <= self.rows {
                self.data[l * self.cols + i]
            } else {
                self.data[i * self.cols + l].conj()
            }
        };
        let mut g = ComplexMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..inner {
                    acc += at(i, l).conj() * at(j, l);
                }
                g.data[i * k + j] = acc;
                g.data[j * k + i] = acc.conj();
            }
        }
        g
    }

    fn mul_vec(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

/// Converged dominant eigenvalue with the iteration count used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub value: f64,
    pub iterations: u32,
}

/// Dominant eigenvalue of a Hermitian positive semidefinite matrix.
///
/// Starts from the all-ones vector and stops when the Rayleigh quotient
/// changes by at most `rel_tol` relative. Returns `None` without
/// convergence in `max_iter` steps.
pub fn largest_eigenvalue_hermitian(
    g: &ComplexMatrix,
    rel_tol: f64,
    max_iter: u32,
) -> Option<PowerIteration> {
    let k = g.rows;
    debug_assert_eq!(k, g.cols);
    if k == 1 {
        return Some(PowerIteration {
            value: g.data[0].re,
            iterations: 1,
        });
    }
    let scale = 1.0 / (k as f64).sqrt();
    let mut v = vec![Complex64::new(scale, 0.0); k];
    let mut w = vec![Complex64::new(0.0, 0.0); k];
    let mut previous = f64::NAN;
    for iter in 1..=max_iter {
        g.mul_vec(&v, &mut w);
        let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Some(PowerIteration {
                value: 0.0,
                iterations: iter,
            });
        }
        if (rayleigh - previous).abs() <= rel_tol * rayleigh.abs() {
            return Some(PowerIteration {
                value: rayleigh,
                iterations: iter,
            });
        }
        previous = rayleigh;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    None
}

/// `sigma_max^2(H)` via power iteration on the smaller Gram matrix.
pub fn largest_singular_value_sqr(
    h: &ComplexMatrix,
    rel_tol: f64,
    max_iter: u32,
) -> Option<PowerIteration> {
    largest_eigenvalue_hermitian(&h.gram_small_side(), rel_tol, max_iter)
}
