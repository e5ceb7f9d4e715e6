//! Newton directions for the barrier subproblem.
//!
//! The negated Hessian of `t·L(λ) + barrier` is
//!
//! ```text
//! M = D + t·(G ∘ G) + u·uᵀ,   Gᵢⱼ = yᵢᵀyⱼ,   yᵢ = chol(Ã)⁻¹xᵢ,   u = c/s
//! ```
//!
//! with `D` diagonal and `s` the budget slack. Near the budget face `u·uᵀ`
//! dwarfs the rest, and folding it into one factorization cancels away the
//! curvature in the directions orthogonal to `c`. The system is therefore
//! solved for `M₀ = D + t·(G ∘ G)` and the budget term added by
//! Sherman-Morrison.
//!
//! `G ∘ G` has rank at most `p = d(d+1)/2`: writing
//! `Kᵢ = (yᵢₐ², √2·yᵢₐyᵢᵦ for a < b)` gives `G ∘ G = K·Kᵀ`. For `n` large
//! against `p`, `M₀` is inverted in that `p`-dimensional space by the
//! Woodbury identity instead of being factored.

use alloc::vec;
use alloc::vec::Vec;

use super::NewtonSystem;
use crate::linalg::ScaledCholesky;

pub(super) struct NewtonInputs<'a> {
    /// Whitened rows, row-major `n × d`.
    pub y: &'a [f64],
    pub dim: usize,
    pub weight: f64,
    /// Diagonal barrier curvature.
    pub diag: &'a [f64],
    pub costs: &'a [f64],
    pub budget_slack: f64,
}

impl NewtonInputs<'_> {
    fn n(&self) -> usize {
        self.diag.len()
    }

    fn rank(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }
}

/// Componentwise backward error accepted from the low-rank solve.
const LOW_RANK_BACKWARD_TOL: f64 = 1e-8;

/// Solves `M·Δ = rhs`; `None` if the system is numerically singular.
///
/// In [`NewtonSystem::Auto`] mode a low-rank solution whose componentwise
/// backward error exceeds [`LOW_RANK_BACKWARD_TOL`], or that is not an
/// ascent direction, is discarded and the
/// system refactored densely: when the barrier diagonal spans many orders
/// of magnitude the Woodbury form can lose all accuracy.
pub(super) fn direction(inputs: &NewtonInputs<'_>, rhs: &[f64], mode: NewtonSystem) -> Option<Vec<f64>> {
    let dense = |inputs| solve_with(&Base::dense(inputs)?, inputs, rhs);
    match mode {
        NewtonSystem::Dense => dense(inputs),
        NewtonSystem::LowRank => solve_with(&Base::low_rank(inputs)?, inputs, rhs),
        NewtonSystem::Auto if inputs.n() <= 2 * (inputs.rank() + 1) => dense(inputs),
        NewtonSystem::Auto => {
            let accurate = Base::low_rank(inputs).and_then(|base| {
                let out = solve_with(&base, inputs, rhs)?;
                let ascent = rhs.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>() > 0.0;
                (ascent && base.backward_error(inputs, &out, rhs) <= LOW_RANK_BACKWARD_TOL).then_some(out)
            });
            accurate.or_else(|| {
                log::debug!("low-rank Newton solve lost accuracy; refactoring densely");
                dense(inputs)
            })
        }
    }
}

/// `ΔᵀMΔ = Σ DᵢΔᵢ² + t·‖Σ Δᵢyᵢyᵢᵀ‖²_F + (uᵀΔ)²`, a sum of squares and so
/// never negative.
pub(super) fn curvature(inputs: &NewtonInputs<'_>, dir: &[f64]) -> f64 {
    let d = inputs.dim;
    let mut outer = vec![0.0; d * d];
    for (yi, &di) in inputs.y.chunks_exact(d).zip(dir) {
        for a in 0..d {
            for b in 0..=a {
                outer[a * d + b] += di * yi[a] * yi[b];
            }
        }
    }
    let mut frobenius = 0.0;
    for a in 0..d {
        for b in 0..a {
            frobenius += 2.0 * outer[a * d + b] * outer[a * d + b];
        }
        frobenius += outer[a * d + a] * outer[a * d + a];
    }
    let budget: f64 = budget_row(inputs).iter().zip(dir).map(|(u, v)| u * v).sum();
    let diag: f64 = inputs.diag.iter().zip(dir).map(|(di, v)| di * v * v).sum();
    diag + inputs.weight * frobenius + budget * budget
}

fn solve_with(base: &Base<'_>, inputs: &NewtonInputs<'_>, rhs: &[f64]) -> Option<Vec<f64>> {
    let u = budget_row(inputs);
    let z = base.solve(rhs);
    let w = base.solve(&u);
    let uz: f64 = u.iter().zip(&z).map(|(a, b)| a * b).sum();
    let uw: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
    let coeff = uz / (1.0 + uw);
    let out: Vec<f64> = z.iter().zip(&w).map(|(zi, wi)| zi - coeff * wi).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn budget_row(inputs: &NewtonInputs<'_>) -> Vec<f64> {
    inputs.costs.iter().map(|c| c / inputs.budget_slack).collect()
}

enum Base<'a> {
    Dense(ScaledCholesky),
    LowRank {
        diag: &'a [f64],
        /// `√t·K`, row-major `n × p`.
        u: Vec<f64>,
        p: usize,
        /// Factor of `I + UᵀD⁻¹U`.
        inner: ScaledCholesky,
    },
}

impl<'a> Base<'a> {
    fn dense(inp: &NewtonInputs<'a>) -> Option<Self> {
        let (n, d) = (inp.n(), inp.dim);
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            let yi = &inp.y[i * d..(i + 1) * d];
            for j in 0..=i {
                let yj = &inp.y[j * d..(j + 1) * d];
                let g: f64 = yi.iter().zip(yj).map(|(a, b)| a * b).sum();
                let v = inp.weight * g * g;
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
            m[i * n + i] += inp.diag[i];
        }
        Some(Base::Dense(ScaledCholesky::factor(&mut m, n)?))
    }

    fn low_rank(inp: &NewtonInputs<'a>) -> Option<Self> {
        let (n, d) = (inp.n(), inp.dim);
        let p = inp.rank();
        let sqrt_t = libm::sqrt(inp.weight);
        let sqrt2 = core::f64::consts::SQRT_2;
        let mut u = vec![0.0; n * p];
        for i in 0..n {
            let yi = &inp.y[i * d..(i + 1) * d];
            let row = &mut u[i * p..(i + 1) * p];
            let mut k = 0;
            for a in 0..d {
                row[k] = sqrt_t * yi[a] * yi[a];
                k += 1;
            }
            for a in 0..d {
                for b in (a + 1)..d {
                    row[k] = sqrt_t * sqrt2 * yi[a] * yi[b];
                    k += 1;
                }
            }
        }
        let mut inner = vec![0.0; p * p];
        for i in 0..n {
            let row = &u[i * p..(i + 1) * p];
            let inv_d = 1.0 / inp.diag[i];
            for a in 0..p {
                let ra = row[a] * inv_d;
                for b in 0..=a {
                    inner[a * p + b] += ra * row[b];
                }
            }
        }
        for a in 0..p {
            inner[a * p + a] += 1.0;
            for b in 0..a {
                inner[b * p + a] = inner[a * p + b];
            }
        }
        let inner = ScaledCholesky::factor(&mut inner, p)?;
        Some(Base::LowRank { diag: inp.diag, u, p, inner })
    }

    /// `maxᵢ |M·x − rhs|ᵢ / (|D||x| + |U||U|ᵀ|x| + |u||u|ᵀ|x| + |rhs|)ᵢ`,
    /// only meaningful for the low-rank form.
    fn backward_error(&self, inputs: &NewtonInputs<'_>, x: &[f64], rhs: &[f64]) -> f64 {
        let Base::LowRank { diag, u, p, .. } = self else {
            return 0.0;
        };
        let p = *p;
        let budget = budget_row(inputs);
        let mut proj = vec![0.0; p];
        let mut proj_abs = vec![0.0; p];
        for (i, xi) in x.iter().enumerate() {
            for a in 0..p {
                proj[a] += u[i * p + a] * xi;
                proj_abs[a] += (u[i * p + a] * xi).abs();
            }
        }
        let ux: f64 = budget.iter().zip(x).map(|(a, b)| a * b).sum();
        let ux_abs: f64 = budget.iter().zip(x).map(|(a, b)| (a * b).abs()).sum();
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let row = &u[i * p..(i + 1) * p];
            let low: f64 = row.iter().zip(&proj).map(|(a, b)| a * b).sum();
            let low_abs: f64 = row.iter().zip(&proj_abs).map(|(a, b)| a.abs() * b).sum();
            let residual = diag[i] * x[i] + low + budget[i] * ux - rhs[i];
            let scale = (diag[i] * x[i]).abs() + low_abs + budget[i].abs() * ux_abs + rhs[i].abs();
            if scale > 0.0 {
                worst = worst.max(residual.abs() / scale);
            }
        }
        worst
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            Base::Dense(chol) => chol.solve(rhs),
            // (D + UUᵀ)⁻¹r = D⁻¹r − D⁻¹U (I + UᵀD⁻¹U)⁻¹ UᵀD⁻¹r
            Base::LowRank { diag, u, p, inner } => {
                let p = *p;
                let mut z: Vec<f64> = rhs.iter().zip(diag.iter()).map(|(r, di)| r / di).collect();
                let mut proj = vec![0.0; p];
                for (i, zi) in z.iter().enumerate() {
                    for (a, pa) in proj.iter_mut().enumerate() {
                        *pa += u[i * p + a] * zi;
                    }
                }
                let w = inner.solve(&proj);
                for (i, zi) in z.iter_mut().enumerate() {
                    let corr: f64 = u[i * p..(i + 1) * p].iter().zip(&w).map(|(a, b)| a * b).sum();
                    *zi -= corr / diag[i];
                }
                z
            }
        }
    }
}
