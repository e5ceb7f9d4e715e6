//! Budget-feasible procurement of experiments under the Bayes D-optimality
//! criterion.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: the log-det value function and its incremental state, the
//! multilinear and concave extensions, pipage rounding, a log-barrier solver
//! for the concave relaxation with a δ-decreasing wrapper, the
//! greedy/threshold-payment mechanism, and brute-force reference oracles.
//!
//! Conventions used throughout:
//!
//! * indices are 0-based;
//! * `V(S) = log det(I + XₛᵀXₛ)`, and the extensions `F` and `L` use the same
//!   scale (no factor ½); the generalized-prior value keeps the ½ of the
//!   information-gain formula;
//! * ties in every argmax are broken towards the lowest index, with ratios
//!   within a relative `1e-12` treated as equal.

#![no_std]
#![warn(missing_debug_implementations)]
// NaN-rejecting checks are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod extensions;
pub mod instance;
pub mod linalg;
pub mod mechanism;
pub mod oracles;
pub mod rounding;
pub mod solver;
pub mod value;

pub use error::{Error, Result};
pub use extensions::{
    concave_gradient, concave_hessian, concave_relaxation, multilinear_exact, multilinear_monte_carlo, FractionalPoint,
    McEstimate, MULTILINEAR_EXACT_CAP,
};
pub use instance::Instance;
pub use mechanism::{
    allocate, branch_constant, greedy_allocate, run_mechanism, threshold_payment, utility_at_report, Allocation,
    Branch, GreedyStep, GreedyTrace, InvariantViolation, MechanismConfig, MechanismOutcome,
};
pub use oracles::{
    brute_force_opt, brute_force_part, greedy_max_baseline, non_monotonicity_demo, BestSubset, NonMonotonicityDemo,
    QuotedNumeric,
};
pub use rounding::{pipage_round, ExactMultilinear, MonteCarloMultilinear, MultilinearOracle};
pub use solver::{solve_barrier, solve_monotone, SolverConfig, SolverReport};
pub use value::{max_singleton, value, value_generalized, SubsetState};

/// Relative tolerance under which two ratios or values count as tied.
pub(crate) const TIE_RTOL: f64 = 1e-12;

/// `true` when `candidate` is better than `incumbent` by more than the tie
/// tolerance. Infinite ratios (zero-cost items) tie with each other.
pub(crate) fn strictly_better(candidate: f64, incumbent: f64) -> bool {
    if incumbent == f64::INFINITY {
        return false;
    }
    if candidate == f64::INFINITY {
        return true;
    }
    candidate - incumbent > TIE_RTOL * libm::fabs(incumbent).max(f64::MIN_POSITIVE)
}
