use alloc::vec;
use alloc::vec::Vec;

use super::newton::{curvature, direction, NewtonInputs};
use super::{complement, SolverConfig, SolverError, SolverReport, EPS_PRIME_FLOOR};
use crate::extensions::{relaxed_factor, whitened_rows, FractionalPoint};
use crate::linalg::{compensated_residual, Cholesky};
use crate::{Error, Instance, Result};

/// Below this Newton decrement the full step is taken without a line search
/// (quadratic convergence region of a self-concordant function).
const PURE_NEWTON_DECREMENT: f64 = 0.25;

/// Fraction of the distance to the boundary a damped step may cover.
const BOUNDARY_FRACTION: f64 = 0.99;

const MIN_STEP: f64 = 1e-20;

/// Maximizes `L` over `D_{c,α}` restricted to the items outside `exclude`,
/// to within `eps_prime` (raised to `EPS_PRIME_FLOOR` when smaller).
///
/// For each barrier weight `t` the method maximizes
/// `t·L(λ) + Σ log(λᵢ − α) + Σ log(1 − λᵢ) + log(B − cᵀλ)` by damped Newton
/// steps, then multiplies `t` by `barrier_growth`. It stops once the dual
/// bound below certifies `L*_{c,α} − L(λ) ≤ ε′`:
///
/// ```text
/// L*_{c,α} ≤ L(λ) + ξ·(B − cᵀλ) + Σᵢ max(rᵢ(1 − λᵢ), rᵢ(α − λᵢ)),
/// rᵢ = ∂ᵢL(λ) − ξcᵢ,  for every ξ ≥ 0,
/// ```
///
/// minimized over `ξ`. At an exact center the bound is at most `(2n + 1)/t`.
pub fn solve_barrier(
    instance: &Instance,
    alpha: f64,
    eps_prime: f64,
    exclude: &[usize],
    config: &SolverConfig,
) -> Result<SolverReport> {
    config.validate_barrier()?;
    for &i in exclude {
        instance.check_index(i)?;
    }
    let keep = complement(instance.n(), exclude);
    let m = keep.len();
    if !(alpha >= 0.0) || (m > 0 && alpha * m as f64 >= 1.0) {
        return Err(Error::InvalidParameter("alpha must lie in [0, 1/n)"));
    }
    if !(eps_prime > 0.0) {
        return Err(Error::InvalidParameter("eps_prime must be positive"));
    }
    let (target, clamped) = if eps_prime < EPS_PRIME_FLOOR {
        log::warn!(
            "accuracy {eps_prime:e} is below {EPS_PRIME_FLOOR:e}; clamping, \
             δ-decreasingness is no longer guaranteed"
        );
        (EPS_PRIME_FLOOR, true)
    } else {
        (eps_prime, false)
    };
    if m == 0 {
        return Ok(SolverReport {
            l_hat: 0.0,
            lambda_hat: FractionalPoint::new(vec![0.0; instance.n()])?,
            alpha_used: alpha,
            eps_prime_used: target,
            gap_certificate: 0.0,
            newton_iterations: 0,
            outer_iterations: 0,
            eps_prime_clamped: clamped,
        });
    }

    let reduced = instance.restrict(&keep)?;
    let problem = Barrier { instance: &reduced, alpha };
    let mut x = problem.initial_point()?;
    let mut weight = config.initial_weight;
    let mut newton_iterations = 0;
    let mut last_gap = f64::INFINITY;
    for outer in 1..=config.max_outer_iters {
        newton_iterations += problem.center(weight, &mut x, config, outer)?;
        let (l_value, gap) = problem.certificate(&x);
        last_gap = gap;
        if gap <= target {
            let mut lambda = vec![0.0; instance.n()];
            for (&k, &v) in keep.iter().zip(&x) {
                lambda[k] = v;
            }
            return Ok(SolverReport {
                l_hat: l_value,
                lambda_hat: FractionalPoint::new(lambda)?,
                alpha_used: alpha,
                eps_prime_used: target,
                gap_certificate: gap,
                newton_iterations,
                outer_iterations: outer,
                eps_prime_clamped: clamped,
            });
        }
        weight *= config.barrier_growth;
    }
    Err(SolverError::NotCertified { gap: last_gap, target }.into())
}

struct Barrier<'a> {
    instance: &'a Instance,
    alpha: f64,
}

/// Everything the Newton step needs at one point.
struct Local {
    l_value: f64,
    gradient: Vec<f64>,
    whitened: Vec<f64>,
}

impl Barrier<'_> {
    fn n(&self) -> usize {
        self.instance.n()
    }

    /// `B − cᵀx`. Near the budget face this is far smaller than either
    /// term, and the barrier gradient `c/slack` needs it to full relative
    /// accuracy.
    fn slack(&self, x: &[f64]) -> f64 {
        compensated_residual(self.instance.budget(), self.instance.costs(), x)
    }

    /// `λᵢ = max(1.5α, 1/n)`, capped at the middle of `[α, 1]` and pulled
    /// towards `α` until `cᵀλ ≤ B − margin`.
    fn initial_point(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let alpha = self.alpha;
        let start = (1.5 * alpha).max(1.0 / n as f64).min(0.5 * (1.0 + alpha));
        let costs = self.instance.costs();
        let budget = self.instance.budget();
        let floor_spend: f64 = costs.iter().map(|c| c * alpha).sum();
        let extra: f64 = costs.iter().map(|c| c * (start - alpha)).sum();
        let room = budget - floor_spend;
        if !(room > 0.0) {
            return Err(SolverError::EmptyInterior.into());
        }
        let margin = (1e-6 * budget).min(0.5 * room);
        let theta = if extra > room - margin { (room - margin) / extra } else { 1.0 };
        let x: Vec<f64> = (0..n).map(|_| alpha + theta * (start - alpha)).collect();
        if x.iter().any(|&v| !(v > alpha && v < 1.0)) || !(self.slack(&x) > 0.0) {
            return Err(SolverError::EmptyInterior.into());
        }
        Ok(x)
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v > self.alpha && v < 1.0) && self.slack(x) > 0.0
    }

    fn local(&self, x: &[f64]) -> Local {
        let factor = relaxed_factor(self.instance, x);
        let whitened = whitened_rows(self.instance, &factor);
        let gradient = whitened.chunks_exact(self.instance.dim()).map(|r| r.iter().map(|v| v * v).sum()).collect();
        Local { l_value: factor.log_det(), gradient, whitened }
    }

    /// Change of `t·L + barrier` from `x` to `x + Δ`, evaluated from the
    /// increments so that it stays accurate when the objective itself is
    /// large: `L(x + Δ) − L(x) = log det(I + Σ Δᵢyᵢyᵢᵀ)` with the whitened
    /// rows at `x`, and `log(a + δ) − log a = log1p(δ/a)`. `None` when
    /// `x + Δ` leaves the open domain.
    fn objective_change(&self, weight: f64, x: &[f64], delta: &[f64], local: &Local) -> Option<f64> {
        let trial: Vec<f64> = x.iter().zip(delta).map(|(v, d)| v + d).collect();
        if !self.strictly_feasible(&trial) {
            return None;
        }
        let d = self.instance.dim();
        let mut m = vec![0.0; d * d];
        for k in 0..d {
            m[k * d + k] = 1.0;
        }
        for (yi, &di) in local.whitened.chunks_exact(d).zip(delta) {
            for a in 0..d {
                for b in 0..=a {
                    m[a * d + b] += di * yi[a] * yi[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                m[b * d + a] = m[a * d + b];
            }
        }
        let l_change = Cholesky::factor(&m, d)?.log_det();
        let mut change = weight * l_change;
        let mut spend_change = 0.0;
        for i in 0..x.len() {
            change += libm::log1p(delta[i] / (x[i] - self.alpha)) + libm::log1p(-delta[i] / (1.0 - x[i]));
            spend_change += self.instance.costs()[i] * delta[i];
        }
        change += libm::log1p(-spend_change / self.slack(x));
        change.is_finite().then_some(change)
    }

    /// Largest step along `dir` that stays strictly inside the domain.
    fn max_step(&self, x: &[f64], dir: &[f64]) -> f64 {
        let mut step = f64::INFINITY;
        for (&v, &dv) in x.iter().zip(dir) {
            if dv < 0.0 {
                step = step.min((v - self.alpha) / -dv);
            } else if dv > 0.0 {
                step = step.min((1.0 - v) / dv);
            }
        }
        let rate: f64 = dir.iter().zip(self.instance.costs()).map(|(d, c)| d * c).sum();
        if rate > 0.0 {
            step = step.min(self.slack(x) / rate);
        }
        step
    }

    /// Newton iterations for the centering problem at weight `t`; returns
    /// the number of steps taken.
    fn center(&self, weight: f64, x: &mut Vec<f64>, config: &SolverConfig, outer: usize) -> Result<usize> {
        let n = self.n();
        let costs = self.instance.costs();
        let mut previous = f64::INFINITY;
        let mut decrement_sq = f64::INFINITY;
        for it in 0..config.max_newton_iters {
            let local = self.local(x);
            let slack = self.slack(x);
            let mut grad = vec![0.0; n];
            let mut diag = vec![0.0; n];
            for i in 0..n {
                let lo = x[i] - self.alpha;
                let up = 1.0 - x[i];
                grad[i] = weight * local.gradient[i] + 1.0 / lo - 1.0 / up - costs[i] / slack;
                diag[i] = 1.0 / (lo * lo) + 1.0 / (up * up);
            }
            let inputs = NewtonInputs {
                y: &local.whitened,
                dim: self.instance.dim(),
                weight,
                diag: &diag,
                costs,
                budget_slack: slack,
            };
            let dir =
                direction(&inputs, &grad, config.newton_system).ok_or(Error::Solver(SolverError::SingularSystem))?;
            // ΔᵀMΔ rather than gᵀΔ: the two agree for an exact solve, but
            // only the first stays non-negative when g is dominated by the
            // budget term and gᵀΔ cancels
            decrement_sq = curvature(&inputs, &dir);
            if !(decrement_sq >= 0.0) {
                return Err(SolverError::SingularSystem.into());
            }
            if decrement_sq / 2.0 <= config.newton_tol {
                return Ok(it);
            }

            let mut step = (BOUNDARY_FRACTION * self.max_step(x, &dir)).min(1.0);
            // a full step that leaves the domain despite a small decrement
            // means the direction is inaccurate; fall back to the line search
            if libm::sqrt(decrement_sq) >= PURE_NEWTON_DECREMENT || step < 1.0 {
                loop {
                    let delta: Vec<f64> = dir.iter().map(|d| step * d).collect();
                    if let Some(change) = self.objective_change(weight, x, &delta, &local) {
                        if change >= config.line_search_alpha * step * decrement_sq {
                            x.iter_mut().zip(&delta).for_each(|(v, d)| *v += d);
                            break;
                        }
                    }
                    step *= config.line_search_beta;
                    if step < MIN_STEP {
                        // no representable ascent left; the certificate
                        // decides whether this point is good enough
                        log::debug!("line search stalled at t = {weight:e}, decrement² = {decrement_sq:e}");
                        return Ok(it);
                    }
                }
                previous = f64::INFINITY;
            } else {
                // inside the quadratic convergence region the decrement at
                // least quarters per step; when it does not, it has reached
                // the rounding floor
                if decrement_sq > 0.5 * previous {
                    return Ok(it);
                }
                previous = decrement_sq;
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(v, d)| v + d).collect();
                if !self.strictly_feasible(&trial) {
                    return Err(SolverError::NewtonDiverged { outer, decrement: decrement_sq }.into());
                }
                *x = trial;
            }
        }
        Err(SolverError::NewtonDiverged { outer, decrement: decrement_sq }.into())
    }

    /// `(L(x), certified upper bound on L*_{c,α} − L(x))`.
    fn certificate(&self, x: &[f64]) -> (f64, f64) {
        let local = self.local(x);
        let costs = self.instance.costs();
        let slack = self.slack(x);
        let gap_at = |xi: f64| -> f64 {
            let mut total = xi * slack;
            for i in 0..x.len() {
                let r = local.gradient[i] - xi * costs[i];
                total += (r * (1.0 - x[i])).max(r * (self.alpha - x[i]));
            }
            total
        };
        // piecewise linear and convex in ξ: the minimum sits at 0 or at a
        // breakpoint ∂ᵢL/cᵢ
        let mut best = gap_at(0.0);
        for (g, &c) in local.gradient.iter().zip(costs) {
            if c > 0.0 {
                best = best.min(gap_at(g / c));
            }
        }
        (local.l_value, best.max(0.0))
    }
}
