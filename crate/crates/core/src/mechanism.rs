//! The budget-feasible mechanism: allocation by either the best single
//! experiment or a greedy set, and threshold payments.
//!
//! Let `i*` be the item of largest `V({i})` and `OPT′` the δ-decreasing
//! estimate of the relaxed optimum with `i*` removed. If `OPT′ < C·V({i*})`
//! the mechanism buys `{i*}` and pays it `B`. Otherwise it runs the greedy
//! of [`greedy_allocate`] and pays each winner its threshold cost, found by
//! bisection over the winner's report.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::solver::{solve_monotone, SolverConfig, SolverReport};
use crate::value::SubsetState;
use crate::{max_singleton, strictly_better, Error, Instance, Result};

/// Slack allowed on `Σ pᵢ ≤ B` when checking outcomes.
pub const BUDGET_TOL: f64 = 1e-9;

/// `C = (8e − 1 + √(64e² − 24e + 9)) / (2(e − 1)) ≈ 11.977`, the threshold
/// on `OPT′ / V({i*})` above which the greedy set is used.
pub fn branch_constant() -> f64 {
    let e = core::f64::consts::E;
    (8.0 * e - 1.0 + libm::sqrt(64.0 * e * e - 24.0 * e + 9.0)) / (2.0 * (e - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Singleton,
    Greedy,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Singleton => "singleton",
            Branch::Greedy => "greedy",
        })
    }
}

/// One candidate considered by the greedy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStep {
    pub index: usize,
    /// `V(S ∪ {i}) − V(S)` for the set `S` chosen before this step.
    pub gain: f64,
    pub cost: f64,
    /// `(B/2)·gain / V(S ∪ {i})`; the item is admitted iff `cost` is at most
    /// this.
    pub stopping_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GreedyTrace {
    /// Admitted items in order.
    pub steps: Vec<GreedyStep>,
    /// The candidate whose stopping test failed, if the loop ended that way.
    pub rejected: Option<GreedyStep>,
}

impl GreedyTrace {
    pub fn members(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.index).collect()
    }

    /// `V(S_G)`, the sum of the admitted gains.
    pub fn value(&self) -> f64 {
        self.steps.iter().map(|s| s.gain).sum()
    }

    fn step_of(&self, i: usize) -> Option<&GreedyStep> {
        self.steps.iter().find(|s| s.index == i)
    }
}

/// Greedy by marginal value per unit cost, admitting the best remaining item
/// while `cᵢ ≤ (B/2)·(V(S ∪ {i}) − V(S)) / V(S ∪ {i})` and stopping at the
/// first failure.
///
/// Zero-cost items with positive gain rank first (their ratio is infinite);
/// items with no gain are never admitted. Ties go to the lowest index.
pub fn greedy_allocate(instance: &Instance) -> GreedyTrace {
    let n = instance.n();
    let half_budget = 0.5 * instance.budget();
    let mut state = SubsetState::new(instance);
    let mut trace = GreedyTrace::default();
    let mut remaining: Vec<usize> = (0..n).collect();
    loop {
        let mut best: Option<(usize, f64, f64)> = None;
        for (slot, &i) in remaining.iter().enumerate() {
            let gain = state.marginal_gain(i).expect("remaining items are not members");
            if !(gain > 0.0) {
                continue;
            }
            let cost = instance.cost(i);
            let ratio = if cost == 0.0 { f64::INFINITY } else { gain / cost };
            if best.is_none_or(|(_, _, r)| strictly_better(ratio, r)) {
                best = Some((slot, gain, ratio));
            }
        }
        let Some((slot, gain, _)) = best else {
            return trace;
        };
        let index = remaining[slot];
        let cost = instance.cost(index);
        let step = GreedyStep { index, gain, cost, stopping_ratio: half_budget * gain / (state.value() + gain) };
        if cost > step.stopping_ratio {
            trace.rejected = Some(step);
            return trace;
        }
        state.push(index).expect("remaining items are not members");
        remaining.remove(slot);
        trace.steps.push(step);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MechanismConfig {
    pub solver: SolverConfig,
    /// Bisection width for threshold payments; `None` means `1e-6·B`.
    pub pay_tol: Option<f64>,
}

impl MechanismConfig {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        Self { solver: SolverConfig::with_accuracy(epsilon, delta), pay_tol: None }
    }

    pub fn pay_tol_for(&self, budget: f64) -> f64 {
        self.pay_tol.unwrap_or(1e-6 * budget)
    }

    fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if let Some(tol) = self.pay_tol {
            if !(tol > 0.0) {
                return Err(Error::InvalidParameter("pay_tol must be positive"));
            }
        }
        Ok(())
    }
}

/// The allocation rule's output and how it was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Allocated items in increasing order.
    pub allocated: Vec<usize>,
    pub branch: Branch,
    pub i_star: usize,
    /// `V({i*})`.
    pub v_star: f64,
    /// `OPT′`, the estimate with `i*` removed.
    pub opt_minus_istar: f64,
    /// `C·V({i*})`.
    pub c_vstar: f64,
    pub solver: SolverReport,
    /// Run on every allocation so the diagnostics are complete; it decides
    /// the outcome only on the greedy branch.
    pub greedy: GreedyTrace,
}

impl Allocation {
    pub fn contains(&self, i: usize) -> bool {
        self.allocated.binary_search(&i).is_ok()
    }
}

/// Runs the allocation rule.
pub fn allocate(instance: &Instance, config: &MechanismConfig) -> Result<Allocation> {
    config.validate()?;
    let (i_star, v_star) = max_singleton(instance);
    let report = solve_monotone(instance, &[i_star], &config.solver)?;
    Ok(allocate_with(instance, i_star, v_star, report))
}

fn allocate_with(instance: &Instance, i_star: usize, v_star: f64, solver: SolverReport) -> Allocation {
    let c_vstar = branch_constant() * v_star;
    let opt_minus_istar = solver.l_hat;
    let greedy = greedy_allocate(instance);
    let (branch, mut allocated) =
        if opt_minus_istar < c_vstar { (Branch::Singleton, vec![i_star]) } else { (Branch::Greedy, greedy.members()) };
    if !(v_star > 0.0) && branch == Branch::Singleton {
        allocated.clear();
    }
    allocated.sort_unstable();
    Allocation { allocated, branch, i_star, v_star, opt_minus_istar, c_vstar, solver, greedy }
}

/// The threshold payment of allocated item `i`.
///
/// On the singleton branch this is `B`. On the greedy branch it is the
/// largest report in `[cᵢ, capᵢ]` that keeps `i` allocated, located by
/// bisection to within `pay_tol` and rounded down, where
/// `capᵢ = B·(V(Sᵢ ∪ {i}) − V(Sᵢ)) / V(S_G)` and `Sᵢ` is the greedy set
/// chosen before `i`. Rounding down keeps `pᵢ ≥ cᵢ`, and `Σ capᵢ = B` keeps
/// the total within budget.
pub fn threshold_payment(
    instance: &Instance,
    allocation: &Allocation,
    i: usize,
    config: &MechanismConfig,
) -> Result<f64> {
    instance.check_index(i)?;
    if !allocation.contains(i) {
        return Err(Error::NotAllocated(i));
    }
    let budget = instance.budget();
    if allocation.branch == Branch::Singleton {
        return Ok(budget);
    }
    let step = allocation.greedy.step_of(i).ok_or(Error::NotAllocated(i))?;
    let cap = budget * step.gain / allocation.greedy.value();
    let mut lo = instance.cost(i);
    let mut hi = cap.max(lo).min(budget);
    let still_allocated =
        |report: f64| -> Result<bool> { Ok(probe(instance, allocation, i, report, config)?.contains(i)) };
    if still_allocated(hi)? {
        return Ok(hi);
    }
    let tol = config.pay_tol_for(budget);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if still_allocated(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Re-runs the allocation with `i` reporting `report`. `i*` does not depend
/// on costs, and `OPT′` does not depend on `c_{i*}`, so the solve is reused
/// when `i = i*`.
fn probe(
    instance: &Instance,
    base: &Allocation,
    i: usize,
    report: f64,
    config: &MechanismConfig,
) -> Result<Allocation> {
    let changed = instance.with_cost(i, report)?;
    let solver =
        if i == base.i_star { base.solver.clone() } else { solve_monotone(&changed, &[base.i_star], &config.solver)? };
    Ok(allocate_with(&changed, base.i_star, base.v_star, solver))
}

/// A broken outcome invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InvariantViolation {
    /// An unallocated item is paid.
    Normalization {
        index: usize,
        payment: f64,
    },
    /// An allocated item is paid less than its cost.
    IndividualRationality {
        index: usize,
        payment: f64,
        cost: f64,
    },
    BudgetExceeded {
        total: f64,
        budget: f64,
    },
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InvariantViolation::Normalization { index, payment } => {
                write!(f, "unallocated item {index} is paid {payment}")
            }
            InvariantViolation::IndividualRationality { index, payment, cost } => {
                write!(f, "item {index} is paid {payment} below its cost {cost}")
            }
            InvariantViolation::BudgetExceeded { total, budget } => {
                write!(f, "payments total {total} exceed the budget {budget}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismOutcome {
    pub allocation: Allocation,
    /// One entry per item; zero for unallocated items.
    pub payments: Vec<f64>,
    /// `V` of the allocated set.
    pub value_allocated: f64,
}

impl MechanismOutcome {
    pub fn allocated(&self) -> &[usize] {
        &self.allocation.allocated
    }

    pub fn branch(&self) -> Branch {
        self.allocation.branch
    }

    pub fn total_payment(&self) -> f64 {
        self.payments.iter().sum()
    }

    /// Normalization, individual rationality and `Σ pᵢ ≤ B + BUDGET_TOL`.
    pub fn invariant_violations(&self, instance: &Instance) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        for (index, &payment) in self.payments.iter().enumerate() {
            if self.allocation.contains(index) {
                let cost = instance.cost(index);
                if !(payment >= cost) {
                    out.push(InvariantViolation::IndividualRationality { index, payment, cost });
                }
            } else if payment != 0.0 {
                out.push(InvariantViolation::Normalization { index, payment });
            }
        }
        let total = self.total_payment();
        if !(total <= instance.budget() + BUDGET_TOL) {
            out.push(InvariantViolation::BudgetExceeded { total, budget: instance.budget() });
        }
        out
    }
}

/// Allocation plus threshold payments for every winner.
pub fn run_mechanism(instance: &Instance, config: &MechanismConfig) -> Result<MechanismOutcome> {
    let allocation = allocate(instance, config)?;
    let mut payments = vec![0.0; instance.n()];
    for &i in &allocation.allocated {
        payments[i] = threshold_payment(instance, &allocation, i, config)?;
    }
    let value_allocated = SubsetState::from_subset(instance, &allocation.allocated)?.value();
    Ok(MechanismOutcome { allocation, payments, value_allocated })
}

/// Utility of item `i`, whose true cost is `instance.cost(i)`, when it
/// reports `report` and everyone else reports truthfully.
pub fn utility_at_report(instance: &Instance, i: usize, report: f64, config: &MechanismConfig) -> Result<f64> {
    instance.check_index(i)?;
    let reported = instance.with_cost(i, report)?;
    let allocation = allocate(&reported, config)?;
    if !allocation.contains(i) {
        return Ok(0.0);
    }
    let payment = threshold_payment(&reported, &allocation, i, config)?;
    Ok(payment - instance.cost(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    fn orthogonal(n: usize, cost: f64, budget: f64) -> Instance {
        let mut features = vec![0.0; n * n];
        for i in 0..n {
            features[i * n + i] = 1.0;
        }
        Instance::new(features, n, vec![cost; n], budget).unwrap()
    }

    #[test]
    fn constant_value() {
        let c = branch_constant();
        assert!((c - 11.976_651_738).abs() < 1e-8, "{c}");
        assert!((1.0 + c - 12.98).abs() < 5e-3);
    }

    #[test]
    fn single_item_boundary_is_admitted() {
        let inst = Instance::from_rows(&[&[1.0]], vec![0.5], 1.0).unwrap();
        assert_eq!(greedy_allocate(&inst).members(), [0]);
        let over = inst.with_cost(0, 0.5 + 1e-12).unwrap();
        let trace = greedy_allocate(&over);
        assert!(trace.steps.is_empty());
        assert_eq!(trace.rejected.unwrap().index, 0);
    }

    #[test]
    fn single_item_takes_the_singleton_branch() {
        let inst = Instance::from_rows(&[&[0.6, 0.0]], vec![0.9], 1.0).unwrap();
        let out = run_mechanism(&inst, &MechanismConfig::default()).unwrap();
        assert_eq!(out.branch(), Branch::Singleton);
        assert_eq!(out.allocated(), [0]);
        assert_eq!(out.payments, [1.0]);
        assert!(out.invariant_violations(&inst).is_empty());
    }

    #[test]
    fn many_cheap_orthogonal_items_use_greedy() {
        // 14 orthogonal unit vectors: OPT′ ≈ 13·log 2 > C·log 2
        let b = 1.0;
        let inst = orthogonal(14, b / 15.0, b);
        let out = run_mechanism(&inst, &MechanismConfig::default()).unwrap();
        assert_eq!(out.branch(), Branch::Greedy);
        assert!(out.allocation.opt_minus_istar > out.allocation.c_vstar);
        // the k-th admitted item needs c ≤ B/(2k), so 7 are admitted
        assert_eq!(out.allocated(), [0, 1, 2, 3, 4, 5, 6]);
        for &i in out.allocated() {
            // reporting above B/15 ranks the item last among equals
            assert!(out.payments[i] >= b / 15.0 && out.payments[i] <= b / 15.0 + 1e-6);
        }
        assert!(out.invariant_violations(&inst).is_empty());
        assert!((out.value_allocated - 7.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_items_rank_first() {
        let inst = Instance::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], vec![0.1, 0.0], 1.0).unwrap();
        assert_eq!(greedy_allocate(&inst).members(), [1, 0]);
    }

    #[test]
    fn payment_requires_allocation() {
        let inst = Instance::from_rows(&[&[1.0, 0.0], &[0.0, 0.5]], vec![0.2, 0.2], 1.0).unwrap();
        let config = MechanismConfig::default();
        let alloc = allocate(&inst, &config).unwrap();
        assert_eq!(alloc.allocated, [0]);
        assert!(matches!(threshold_payment(&inst, &alloc, 1, &config), Err(Error::NotAllocated(1))));
    }
}
