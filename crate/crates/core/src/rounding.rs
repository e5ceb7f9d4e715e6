//! Pipage rounding of a budget-feasible fractional point.
//!
//! While two coordinates `i < j` are fractional, the point moves along
//! `eᵢ − (cᵢ/cⱼ)eⱼ`, which leaves `Σ cₖλₖ` unchanged. Restricted to that line
//! `F` is a convex quadratic, so the better of the two feasible endpoints is
//! at least as good as the start, and each endpoint makes `i` or `j`
//! integral.

use alloc::vec::Vec;

use crate::extensions::{multilinear_exact, multilinear_monte_carlo, FractionalPoint};
use crate::{Error, Instance, Result};

/// Distance from `{0, 1}` above which a coordinate counts as fractional.
pub const FRACTIONAL_TOL: f64 = 1e-9;

/// An evaluator of the multilinear extension used to compare endpoints.
pub trait MultilinearOracle {
    fn evaluate(&self, instance: &Instance, lambda: &[f64]) -> Result<f64>;
}

/// Exhaustive `F`; limited to `n ≤ MULTILINEAR_EXACT_CAP`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMultilinear;

impl MultilinearOracle for ExactMultilinear {
    fn evaluate(&self, instance: &Instance, lambda: &[f64]) -> Result<f64> {
        multilinear_exact(instance, &FractionalPoint::new(lambda.to_vec())?)
    }
}

/// Monte Carlo `F` with a fixed seed, so every evaluation shares the same
/// random stream.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarloMultilinear {
    pub samples: usize,
    pub seed: u64,
}

impl MultilinearOracle for MonteCarloMultilinear {
    fn evaluate(&self, instance: &Instance, lambda: &[f64]) -> Result<f64> {
        let point = FractionalPoint::new(lambda.to_vec())?;
        Ok(multilinear_monte_carlo(instance, &point, self.samples, self.seed)?.estimate)
    }
}

/// Output of [`pipage_round`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipageRounding {
    pub point: FractionalPoint,
    /// Number of pair moves performed.
    pub steps: usize,
}

fn is_fractional(v: f64) -> bool {
    v.min(1.0 - v) > FRACTIONAL_TOL
}

fn snap(v: f64) -> f64 {
    if v <= FRACTIONAL_TOL {
        0.0
    } else if v >= 1.0 - FRACTIONAL_TOL {
        1.0
    } else {
        v
    }
}

/// Rounds `point` to a budget-feasible point with at most one fractional
/// coordinate and `F` no smaller (up to the evaluator's noise).
///
/// When `cⱼ = 0` the move direction is undefined; `λⱼ` is then raised to 1,
/// which costs nothing and cannot decrease `F`. Equal endpoint values go to
/// the endpoint that makes `λᵢ` integral.
pub fn pipage_round<O: MultilinearOracle + ?Sized>(
    instance: &Instance,
    point: &FractionalPoint,
    oracle: &O,
) -> Result<PipageRounding> {
    if point.len() != instance.n() {
        return Err(Error::InvalidParameter("point length differs from the number of items"));
    }
    if !point.is_budget_feasible(instance) {
        return Err(Error::BudgetInfeasible { spent: point.spend(instance), budget: instance.budget() });
    }
    let costs = instance.costs();
    let mut lambda: Vec<f64> = point.lambda().iter().copied().map(snap).collect();
    let mut steps = 0;
    loop {
        let mut fractional = (0..lambda.len()).filter(|&k| is_fractional(lambda[k]));
        let (Some(i), Some(j)) = (fractional.next(), fractional.next()) else {
            break;
        };
        steps += 1;
        if costs[j] == 0.0 {
            lambda[j] = 1.0;
            continue;
        }
        let (li, lj) = (lambda[i], lambda[j]);
        let (ci, cj) = (costs[i], costs[j]);

        // λ(ε) = λ + ε(eᵢ − (cᵢ/cⱼ)eⱼ); candidate endpoints, each tagged with
        // whether it is coordinate i that lands on the boundary.
        let endpoint = |towards_one: bool| -> (Vec<f64>, bool) {
            let mut next = lambda.clone();
            let (i_target, j_target) = if towards_one { (1.0, 0.0) } else { (0.0, 1.0) };
            if ci == 0.0 {
                next[i] = i_target;
                return (next, true);
            }
            // step that brings i to its bound vs. the one that brings j there
            let eps_i = i_target - li;
            let eps_j = (lj - j_target) * cj / ci;
            if eps_i.abs() <= eps_j.abs() {
                next[i] = i_target;
                next[j] = snap(lj - eps_i * ci / cj);
                (next, true)
            } else {
                next[j] = j_target;
                next[i] = snap(li + eps_j);
                (next, false)
            }
        };
        let (up, up_hits_i) = endpoint(true);
        let (down, down_hits_i) = endpoint(false);
        let f_up = oracle.evaluate(instance, &up)?;
        let f_down = oracle.evaluate(instance, &down)?;
        lambda = if f_up > f_down {
            up
        } else if f_down > f_up {
            down
        } else if up_hits_i || !down_hits_i {
            up
        } else {
            down
        };
    }
    let point = FractionalPoint::new(lambda)?;
    Ok(PipageRounding { point, steps })
}
