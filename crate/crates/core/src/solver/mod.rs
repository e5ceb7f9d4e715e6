//! Maximization of the concave relaxation `L` over
//! `D_{c,α} = {λ ∈ [α, 1]ⁿ : Σ cᵢλᵢ ≤ B}`.
//!
//! [`solve_barrier`] is a log-barrier interior-point method with a dual
//! certificate of accuracy. [`solve_monotone`] picks the floor `α` and the
//! target accuracy `ε′` so that the returned estimate of
//! `L*_c = max_{D_c} L` is `ε`-accurate and δ-decreasing in every cost:
//!
//! ```text
//! α  = ε / (δ/B + n²)
//! ε′ = α·δ·b / (2^{n+1}·B)
//! ```

mod barrier;
mod newton;

use alloc::vec::Vec;
use core::fmt;

pub use barrier::solve_barrier;

use crate::extensions::FractionalPoint;
use crate::{Error, Instance, Result};

/// Smallest accuracy target handed to the barrier method.
pub const EPS_PRIME_FLOOR: f64 = 1e-12;

/// How the Newton system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NewtonSystem {
    /// Dense `n × n` Cholesky for small `n`, low-rank form otherwise.
    #[default]
    Auto,
    /// Always factor the `n × n` Hessian.
    Dense,
    /// Always use the Woodbury form built on the `d(d+1)/2`-dimensional
    /// factorization of the log-det Hessian.
    LowRank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Accuracy `ε ∈ (0, 1]` of the δ-decreasing estimator.
    pub epsilon: f64,
    /// Monotonicity gap `δ ∈ (0, 1]`.
    pub delta: f64,
    /// Factor `μ > 1` by which the barrier weight grows.
    pub barrier_growth: f64,
    /// Initial barrier weight `t₀`.
    pub initial_weight: f64,
    /// Centering stops once half the squared Newton decrement is below this.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub max_outer_iters: usize,
    /// Armijo sufficient-increase fraction.
    pub line_search_alpha: f64,
    /// Backtracking shrink factor.
    pub line_search_beta: f64,
    pub newton_system: NewtonSystem,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            delta: 0.05,
            barrier_growth: 20.0,
            initial_weight: 1.0,
            newton_tol: 1e-10,
            max_newton_iters: 200,
            max_outer_iters: 60,
            line_search_alpha: 0.25,
            line_search_beta: 0.5,
            newton_system: NewtonSystem::Auto,
        }
    }
}

impl SolverConfig {
    pub fn with_accuracy(epsilon: f64, delta: f64) -> Self {
        Self { epsilon, delta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1]"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1]"));
        }
        self.validate_barrier()
    }

    pub(crate) fn validate_barrier(&self) -> Result<()> {
        if !(self.barrier_growth > 1.0) {
            return Err(Error::InvalidParameter("barrier growth must exceed 1"));
        }
        if !(self.initial_weight > 0.0) || !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter("t0 and newton_tol must be positive"));
        }
        if self.max_newton_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter("iteration limits must be positive"));
        }
        if !(self.line_search_alpha > 0.0 && self.line_search_alpha < 0.5)
            || !(self.line_search_beta > 0.0 && self.line_search_beta < 1.0)
        {
            return Err(Error::InvalidParameter("line search parameters out of range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// `L(λ̂)`, which satisfies `L(λ̂) ≤ L*_{c,α} ≤ L(λ̂) + gap_certificate`.
    pub l_hat: f64,
    /// Maximizer estimate over all `n` items (excluded items are 0).
    pub lambda_hat: FractionalPoint,
    pub alpha_used: f64,
    pub eps_prime_used: f64,
    /// Certified upper bound on `L*_{c,α} − l_hat`.
    pub gap_certificate: f64,
    pub newton_iterations: usize,
    pub outer_iterations: usize,
    /// `true` when the requested `ε′` was below [`EPS_PRIME_FLOOR`] and was
    /// raised to it; the δ-decreasing guarantee is then heuristic.
    pub eps_prime_clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// No strictly feasible starting point exists.
    EmptyInterior,
    /// Centering did not converge within the Newton iteration limit.
    NewtonDiverged { outer: usize, decrement: f64 },
    /// The accuracy target was not certified within the outer limit.
    NotCertified { gap: f64, target: f64 },
    /// The Newton system could not be factored.
    SingularSystem,
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::EmptyInterior => write!(f, "the feasible region has an empty interior"),
            SolverError::NewtonDiverged { outer, decrement } => {
                write!(f, "centering step {outer} did not converge (Newton decrement² {decrement:e})")
            }
            SolverError::NotCertified { gap, target } => {
                write!(f, "duality gap {gap:e} did not reach the target {target:e}")
            }
            SolverError::SingularSystem => write!(f, "Newton system is not positive definite"),
        }
    }
}

impl core::error::Error for SolverError {}

/// The floor `α = ε / (δ/B + n²)`.
pub fn monotone_floor(epsilon: f64, delta: f64, budget: f64, n: usize) -> f64 {
    epsilon / (delta / budget + (n * n) as f64)
}

/// The accuracy `ε′ = α·δ·b / (2^{n+1}·B)`, before clamping.
pub fn monotone_accuracy(alpha: f64, delta: f64, norm_floor: f64, budget: f64, n: usize) -> f64 {
    libm::ldexp(alpha * delta * norm_floor / budget, -((n + 1) as i32))
}

/// δ-decreasing, ε-accurate estimate of `L*_c` with the items in `exclude`
/// removed from the problem (their `λ` is fixed at 0).
///
/// `n` in the formulas for `α` and `ε′` is the number of remaining items.
/// With no remaining items the optimum is `L(0) = 0`.
pub fn solve_monotone(instance: &Instance, exclude: &[usize], config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let n = instance.n();
    for &i in exclude {
        instance.check_index(i)?;
    }
    let remaining = (0..n).filter(|i| !exclude.contains(i)).count();
    if remaining == 0 {
        return Ok(SolverReport {
            l_hat: 0.0,
            lambda_hat: FractionalPoint::new(alloc::vec![0.0; n])?,
            alpha_used: 0.0,
            eps_prime_used: 0.0,
            gap_certificate: 0.0,
            newton_iterations: 0,
            outer_iterations: 0,
            eps_prime_clamped: false,
        });
    }
    let b = instance.budget();
    let alpha = monotone_floor(config.epsilon, config.delta, b, remaining);
    let eps_prime = monotone_accuracy(alpha, config.delta, instance.norm_floor(), b, remaining);
    solve_barrier(instance, alpha, eps_prime, exclude, config)
}

pub(crate) fn complement(n: usize, exclude: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !exclude.contains(i)).collect()
}
