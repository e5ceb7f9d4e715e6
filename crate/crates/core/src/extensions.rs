//! Continuous extensions of `V` to the cube `[0, 1]ⁿ`.
//!
//! * the multilinear extension `F(λ) = E_{S∼λ}[V(S)]`, where each item enters
//!   `S` independently with probability `λᵢ`;
//! * the concave extension `L(λ) = log det Ã(λ)` with
//!   `Ã(λ) = I + Σ λᵢ xᵢxᵢᵀ`, obtained by swapping the expectation and the
//!   log-det.
//!
//! `½·L ≤ F ≤ L` on the whole cube, and `L` is what the barrier solver
//! maximizes.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::Cholesky;
use crate::value::SubsetState;
use crate::{Error, Instance, Result};

/// Largest `n` accepted by [`multilinear_exact`] (it enumerates `2ⁿ` sets).
pub const MULTILINEAR_EXACT_CAP: usize = 20;

/// Slack on the budget constraint when testing feasibility.
pub const BUDGET_SLACK: f64 = 1e-9;

/// A point `λ ∈ [α, 1]ⁿ` of the relaxed domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPoint {
    lambda: Vec<f64>,
    floor: f64,
}

impl FractionalPoint {
    /// A point of `[0, 1]ⁿ`.
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        Self::with_floor(lambda, 0.0)
    }

    /// A point of `[α, 1]ⁿ`.
    pub fn with_floor(lambda: Vec<f64>, floor: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&floor) {
            return Err(Error::InvalidParameter("floor must lie in [0, 1)"));
        }
        check_cube(&lambda, floor)?;
        Ok(Self { lambda, floor })
    }

    /// The indicator vector `1_S`.
    pub fn indicator(n: usize, subset: &[usize]) -> Result<Self> {
        let mut lambda = vec![0.0; n];
        for &i in subset {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            lambda[i] = 1.0;
        }
        Ok(Self { lambda, floor: 0.0 })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn into_lambda(self) -> Vec<f64> {
        self.lambda
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// `Σ cᵢλᵢ`.
    pub fn spend(&self, instance: &Instance) -> f64 {
        self.lambda.iter().zip(instance.costs()).map(|(l, c)| l * c).sum()
    }

    /// `Σ cᵢλᵢ ≤ B` up to [`BUDGET_SLACK`].
    pub fn is_budget_feasible(&self, instance: &Instance) -> bool {
        self.spend(instance) <= instance.budget() + BUDGET_SLACK
    }

    /// Number of coordinates farther than `tol` from both 0 and 1.
    pub fn fractional_count(&self, tol: f64) -> usize {
        self.lambda.iter().filter(|&&l| l.min(1.0 - l) > tol).count()
    }
}

fn check_cube(lambda: &[f64], floor: f64) -> Result<()> {
    for (index, &value) in lambda.iter().enumerate() {
        if !(floor..=1.0).contains(&value) {
            return Err(Error::Domain { index, value });
        }
    }
    Ok(())
}

fn check_point(instance: &Instance, lambda: &[f64]) -> Result<()> {
    if lambda.len() != instance.n() {
        return Err(Error::InvalidParameter("point length differs from the number of items"));
    }
    check_cube(lambda, 0.0)
}

/// Factor of `Ã(λ) = I + Σ λᵢ xᵢxᵢᵀ` for `λ ≥ 0`.
pub(crate) fn relaxed_factor(instance: &Instance, lambda: &[f64]) -> Cholesky {
    let d = instance.dim();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        a[i * d + i] = 1.0;
    }
    for (k, &l) in lambda.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let x = instance.row(k);
        for i in 0..d {
            let lxi = l * x[i];
            for j in 0..=i {
                a[i * d + j] += lxi * x[j];
            }
        }
    }
    // Ã ⪰ I, so the factorization cannot fail for λ ≥ 0.
    Cholesky::factor(&a, d).expect("I + Σ λᵢ xᵢxᵢᵀ is positive definite for λ ≥ 0")
}

/// Whitened features `yᵢ = L⁻¹xᵢ` (row-major `n × d`) for the factor `L` of
/// `Ã(λ)`, so that `xᵢᵀÃ⁻¹xⱼ = yᵢᵀyⱼ`.
pub(crate) fn whitened_rows(instance: &Instance, factor: &Cholesky) -> Vec<f64> {
    let mut y = instance.features().to_vec();
    for row in y.chunks_exact_mut(instance.dim()) {
        factor.forward_solve(row);
    }
    y
}

/// `L(λ) = log det(I + Σ λᵢ xᵢxᵢᵀ)`.
pub fn concave_relaxation(instance: &Instance, point: &FractionalPoint) -> Result<f64> {
    check_point(instance, point.lambda())?;
    Ok(relaxed_factor(instance, point.lambda()).log_det())
}

/// `∂ᵢL(λ) = xᵢᵀÃ(λ)⁻¹xᵢ`, one factorization and `n` triangular solves.
pub fn concave_gradient(instance: &Instance, point: &FractionalPoint) -> Result<Vec<f64>> {
    check_point(instance, point.lambda())?;
    let factor = relaxed_factor(instance, point.lambda());
    let y = whitened_rows(instance, &factor);
    Ok(y.chunks_exact(instance.dim()).map(|r| r.iter().map(|v| v * v).sum()).collect())
}

/// `∂ᵢ∂ⱼL(λ) = −(xᵢᵀÃ(λ)⁻¹xⱼ)²`, row-major `n × n`.
pub fn concave_hessian(instance: &Instance, point: &FractionalPoint) -> Result<Vec<f64>> {
    check_point(instance, point.lambda())?;
    let factor = relaxed_factor(instance, point.lambda());
    let y = whitened_rows(instance, &factor);
    let (n, d) = (instance.n(), instance.dim());
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let g: f64 = (0..d).map(|k| y[i * d + k] * y[j * d + k]).sum();
            h[i * n + j] = -g * g;
            h[j * n + i] = -g * g;
        }
    }
    Ok(h)
}

/// `F(λ)` by exhaustive enumeration over the sets with non-zero probability.
///
/// Walks the inclusion tree depth first, extending the Cholesky factor by one
/// rank-one update per included item; branches of probability zero are
/// pruned, so integral points cost a single path.
pub fn multilinear_exact(instance: &Instance, point: &FractionalPoint) -> Result<f64> {
    if instance.n() > MULTILINEAR_EXACT_CAP {
        return Err(Error::TooLarge { n: instance.n(), cap: MULTILINEAR_EXACT_CAP });
    }
    check_point(instance, point.lambda())?;
    Ok(expectation(point.lambda(), 0, SubsetState::new(instance), 1.0))
}

fn expectation(lambda: &[f64], k: usize, state: SubsetState<'_>, prob: f64) -> f64 {
    if k == lambda.len() {
        return prob * state.value();
    }
    let p = lambda[k];
    let mut total = 0.0;
    if p < 1.0 {
        total += expectation(lambda, k + 1, state.clone(), prob * (1.0 - p));
    }
    if p > 0.0 {
        let mut with = state;
        with.push(k).expect("items are visited once");
        total += expectation(lambda, k + 1, with, prob * p);
    }
    total
}

/// Monte Carlo estimate of `F(λ)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Sample-mean estimate of `F(λ)` from `samples` independent draws.
///
/// Randomness comes from a ChaCha8 stream keyed by `seed`, one uniform per
/// item per sample in index order, so a `(seed, samples)` pair always
/// reproduces the same estimate bit for bit.
pub fn multilinear_monte_carlo(
    instance: &Instance,
    point: &FractionalPoint,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1"));
    }
    check_point(instance, point.lambda())?;
    let lambda = point.lambda();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for k in 1..=samples {
        let mut state = SubsetState::new(instance);
        for (i, &p) in lambda.iter().enumerate() {
            if unit_uniform(&mut rng) < p {
                state.push(i).expect("items are visited once");
            }
        }
        let v = state.value();
        let delta = v - mean;
        mean += delta / k as f64;
        m2 += delta * (v - mean);
    }
    let stderr = if samples > 1 {
        libm::sqrt(m2 / (samples - 1) as f64 / samples as f64)
    } else if lambda.iter().all(|&l| l == 0.0 || l == 1.0) {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(McEstimate { estimate: mean, stderr })
}

/// Uniform draw in `[0, 1)` with 53 random bits.
fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
