//! Small dense linear algebra: Cholesky factors of symmetric positive
//! definite matrices stored row-major, with rank-one updates.

use alloc::vec;
use alloc::vec::Vec;

/// Lower-triangular factor `L` with `A = L·Lᵀ`.
///
/// Stored as a full row-major `dim × dim` buffer; the strict upper triangle
/// is kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factor of the identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut lower = vec![0.0; dim * dim];
        for i in 0..dim {
            lower[i * dim + i] = 1.0;
        }
        Self { dim, lower }
    }

    /// Factors the symmetric matrix `a` (row-major, only the lower triangle
    /// is read). Returns `None` when a non-positive pivot appears.
    pub fn factor(a: &[f64], dim: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), dim * dim);
        let mut l = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut diag = a[j * dim + j];
            for k in 0..j {
                diag -= l[j * dim + k] * l[j * dim + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return None;
            }
            let ljj = libm::sqrt(diag);
            l[j * dim + j] = ljj;
            for i in (j + 1)..dim {
                let mut s = a[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k];
                }
                l[i * dim + j] = s / ljj;
            }
        }
        Some(Self { dim, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Replaces the factor of `A` by the factor of `A + v·vᵀ` in O(dim²).
    ///
    /// `v` is used as workspace and is overwritten.
    pub fn rank_one_update(&mut self, v: &mut [f64]) {
        let n = self.dim;
        debug_assert_eq!(v.len(), n);
        for j in 0..n {
            let ljj = self.lower[j * n + j];
            let vj = v[j];
            let r = libm::hypot(ljj, vj);
            let c = r / ljj;
            let s = vj / ljj;
            self.lower[j * n + j] = r;
            for i in (j + 1)..n {
                let lij = (self.lower[i * n + j] + s * v[i]) / c;
                self.lower[i * n + j] = lij;
                v[i] = c * v[i] - s * lij;
            }
        }
    }

    /// Solves `L·y = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solves `Lᵀ·x = y` in place.
    pub fn backward_solve(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solves `A·x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward_solve(b);
        self.backward_solve(b);
    }

    /// `log det A = 2 Σ log Lᵢᵢ`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| libm::log(self.at(i, i))).sum::<f64>() * 2.0
    }

    /// `xᵀ A⁻¹ x = ‖L⁻¹x‖²`, using `scratch` (length `dim`) as workspace.
    pub fn inverse_quadratic(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        scratch.copy_from_slice(x);
        self.forward_solve(scratch);
        scratch.iter().map(|y| y * y).sum()
    }
}

/// Cholesky factor of `S·M·S` with `S = diag(M)^{-1/2}`, which keeps the
/// factorization well behaved when the diagonal spans many orders of
/// magnitude.
#[derive(Debug, Clone)]
pub struct ScaledCholesky {
    chol: Cholesky,
    scale: Vec<f64>,
}

impl ScaledCholesky {
    /// `m` is consumed as scratch.
    pub fn factor(m: &mut [f64], dim: usize) -> Option<Self> {
        let mut scale = vec![0.0; dim];
        for i in 0..dim {
            let d = m[i * dim + i];
            if !(d > 0.0) {
                return None;
            }
            scale[i] = 1.0 / libm::sqrt(d);
        }
        for i in 0..dim {
            for j in 0..dim {
                m[i * dim + j] *= scale[i] * scale[j];
            }
        }
        let chol = Cholesky::factor(m, dim)?;
        Some(Self { chol, scale })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = rhs.iter().zip(&self.scale).map(|(r, s)| r * s).collect();
        self.chol.solve(&mut x);
        for (xi, s) in x.iter_mut().zip(&self.scale) {
            *xi *= s;
        }
        x
    }
}

/// `start − Σ aᵢbᵢ` evaluated as if in twice the working precision
/// (error-free products and sums, accumulated separately), so that the
/// result keeps its relative accuracy under heavy cancellation.
pub fn compensated_residual(start: f64, a: &[f64], b: &[f64]) -> f64 {
    let mut sum = start;
    let mut err = 0.0;
    for (&ai, &bi) in a.iter().zip(b) {
        let p = -ai * bi;
        let p_err = libm::fma(-ai, bi, -p);
        let s = sum + p;
        let z = s - sum;
        err += (sum - (s - z)) + (p - z) + p_err;
        sum = s;
    }
    sum + err
}

/// Solves the symmetric positive definite system `m·x = rhs` through
/// [`ScaledCholesky`]. `m` is consumed as scratch.
pub fn solve_spd_scaled(m: &mut [f64], rhs: &[f64], dim: usize) -> Option<Vec<f64>> {
    Some(ScaledCholesky::factor(m, dim)?.solve(rhs))
}
