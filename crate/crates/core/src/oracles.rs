//! Reference computations: the exact non-strategic optimum by enumeration,
//! the full-information greedy, and the fixed instance on which that greedy
//! is not monotone.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::value::{singleton_value, SubsetState};
use crate::{max_singleton, strictly_better, value, Error, Instance, Result};

/// Largest `n` accepted by [`brute_force_opt`].
pub const BRUTE_FORCE_CAP: usize = 22;

/// A budget-feasible set and its value.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSubset {
    pub value: f64,
    /// Sorted indices.
    pub set: Vec<usize>,
}

impl BestSubset {
    fn empty() -> Self {
        Self { value: 0.0, set: Vec::new() }
    }

    /// Larger value wins; within the tie tolerance the lexicographically
    /// smaller set wins.
    pub fn better_than(&self, other: &BestSubset) -> bool {
        if strictly_better(self.value, other.value) {
            return true;
        }
        if strictly_better(other.value, self.value) {
            return false;
        }
        self.set.cmp(&other.set) == Ordering::Less
    }

    /// The better of the two.
    pub fn merge(self, other: BestSubset) -> BestSubset {
        if other.better_than(&self) {
            other
        } else {
            self
        }
    }
}

/// `OPT = max { V(S) : Σ_{i∈S} cᵢ ≤ B }` by enumeration, for
/// `n ≤ BRUTE_FORCE_CAP`.
///
/// Items are visited in increasing cost, so once an item does not fit no
/// costlier one is tried either.
pub fn brute_force_opt(instance: &Instance) -> Result<BestSubset> {
    Ok(brute_force_part(instance, 0, 0)?.unwrap_or_else(BestSubset::empty))
}

/// One of `2^depth` disjoint parts of the [`brute_force_opt`] search: the
/// include/exclude choices for the `depth` cheapest items are fixed by the
/// bits of `part`. `None` when that prefix is already over budget. Merging
/// all parts with [`BestSubset::merge`] gives the full result.
pub fn brute_force_part(instance: &Instance, depth: usize, part: usize) -> Result<Option<BestSubset>> {
    let n = instance.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    if depth > n || part >> depth != 0 {
        return Err(Error::InvalidParameter("part out of range for the split depth"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| instance.cost(a).total_cmp(&instance.cost(b)).then(a.cmp(&b)));

    let mut state = SubsetState::new(instance);
    let mut spent = 0.0;
    for (k, &i) in order.iter().take(depth).enumerate() {
        if part >> k & 1 == 1 {
            spent += instance.cost(i);
            if spent > instance.budget() {
                return Ok(None);
            }
            state.push(i)?;
        }
    }
    let mut search = Search { instance, order: &order, best: BestSubset::empty() };
    search.consider(&state);
    search.descend(state, spent, depth);
    Ok(Some(search.best))
}

struct Search<'a> {
    instance: &'a Instance,
    order: &'a [usize],
    best: BestSubset,
}

impl<'a> Search<'a> {
    fn consider(&mut self, state: &SubsetState<'a>) {
        let mut set = state.members().to_vec();
        set.sort_unstable();
        let candidate = BestSubset { value: state.value(), set };
        if candidate.better_than(&self.best) {
            self.best = candidate;
        }
    }

    fn descend(&mut self, state: SubsetState<'a>, spent: f64, from: usize) {
        for k in from..self.order.len() {
            let i = self.order[k];
            let total = spent + self.instance.cost(i);
            if total > self.instance.budget() {
                // later items cost at least as much
                return;
            }
            let next = state.extended(i).expect("each item is added once");
            self.consider(&next);
            self.descend(next, total, k + 1);
        }
    }
}

/// The full-information greedy: add the best remaining item by marginal
/// value per unit cost while the total cost stays within `B`, stopping at
/// the first item that does not fit; return that set or `{i*}`, whichever
/// has the larger value (`{i*}` on a tie).
pub fn greedy_max_baseline(instance: &Instance) -> Vec<usize> {
    let (greedy, greedy_value) = full_information_greedy(instance);
    let (i_star, v_star) = max_singleton(instance);
    if v_star >= greedy_value {
        vec![i_star]
    } else {
        greedy
    }
}

fn full_information_greedy(instance: &Instance) -> (Vec<usize>, f64) {
    let mut state = SubsetState::new(instance);
    let mut remaining: Vec<usize> = (0..instance.n()).collect();
    let mut spent = 0.0;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (slot, &i) in remaining.iter().enumerate() {
            let gain = state.marginal_gain(i).expect("remaining items are not members");
            if !(gain > 0.0) {
                continue;
            }
            let cost = instance.cost(i);
            let ratio = if cost == 0.0 { f64::INFINITY } else { gain / cost };
            if best.is_none_or(|(_, r)| strictly_better(ratio, r)) {
                best = Some((slot, ratio));
            }
        }
        let Some((slot, _)) = best else { break };
        let i = remaining[slot];
        if spent + instance.cost(i) > instance.budget() {
            break;
        }
        spent += instance.cost(i);
        state.push(i).expect("remaining items are not members");
        remaining.remove(slot);
    }
    let value = state.value();
    let mut set = state.members().to_vec();
    set.sort_unstable();
    (set, value)
}

/// A quantity quoted to three decimals next to the value computed here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotedNumeric {
    pub label: &'static str,
    pub quoted: f64,
    pub computed: f64,
}

impl QuotedNumeric {
    /// `true` when `computed` rounds or truncates to `quoted` at three
    /// decimals; both conventions occur among the quoted figures.
    pub fn agrees(&self) -> bool {
        let scaled = self.computed * 1000.0;
        let target = libm::round(self.quoted * 1000.0);
        libm::round(scaled) == target || libm::floor(scaled) == target
    }
}

/// The non-monotonicity counterexample for the full-information greedy.
#[derive(Debug, Clone, PartialEq)]
pub struct NonMonotonicityDemo {
    pub instance: Instance,
    /// Item whose cost is lowered (0-based, the third item).
    pub agent: usize,
    pub lowered_cost: f64,
    pub numerics: Vec<QuotedNumeric>,
    pub allocation_true: Vec<usize>,
    pub allocation_lowered: Vec<usize>,
}

impl NonMonotonicityDemo {
    /// The agent wins at its true cost and loses after lowering it.
    pub fn allocation_flips(&self) -> bool {
        self.allocation_true.contains(&self.agent) && !self.allocation_lowered.contains(&self.agent)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &QuotedNumeric> {
        self.numerics.iter().filter(|q| !q.agrees())
    }
}

/// Cost reported by the third item in the demo. It must lie in `(5/6, 1)`:
/// below 1 the item is picked first, and above `5/2 − 1 − 2/3` the second
/// item no longer fits once the fourth has been added.
pub const DEMO_LOWERED_COST: f64 = 0.9;

/// Builds the four-item instance in `R³` (`B = 5/2`, costs
/// `(5/2, 1, 1, 2/3)`), evaluates the quoted ratios and values, and runs
/// [`greedy_max_baseline`] at the true costs and with the third cost lowered
/// to [`DEMO_LOWERED_COST`].
pub fn non_monotonicity_demo() -> NonMonotonicityDemo {
    let s = libm::sqrt(0.5);
    let (cos, sin) = (libm::cos(PI / 5.0), libm::sin(PI / 5.0));
    let instance = Instance::from_rows(
        &[&[1.0, 0.0, 0.0], &[0.0, s * cos, s * sin], &[0.0, s, 0.0], &[0.0, 0.0, 0.5]],
        vec![2.5, 1.0, 1.0, 2.0 / 3.0],
        2.5,
    )
    .expect("fixed instance is valid");
    let c = instance.costs();
    let v = |set: &[usize]| value(&instance, set).expect("indices are in range");
    let single = |i: usize| singleton_value(&instance, i);
    let quote = |label, quoted, computed| QuotedNumeric { label, quoted, computed };
    let numerics = vec![
        quote("V(x1)/c1", 0.277, single(0) / c[0]),
        quote("V(x2)/c2", 0.405, single(1) / c[1]),
        quote("V(x3)/c3", 0.405, single(2) / c[2]),
        quote("V(x4)/c4", 0.335, single(3) / c[3]),
        quote("[V(x2,x3)-V(x2)]/c3", 0.329, (v(&[1, 2]) - single(1)) / c[2]),
        quote("[V(x2,x4)-V(x2)]/c4", 0.299, (v(&[1, 3]) - single(1)) / c[3]),
        quote("[V(x3,x2)-V(x3)]/c2", 0.329, (v(&[1, 2]) - single(2)) / c[1]),
        quote("[V(x3,x4)-V(x3)]/c4", 0.334, (v(&[2, 3]) - single(2)) / c[3]),
        quote("V(x2,x3)", 0.734, v(&[1, 2])),
        quote("V(x1)", 0.693, single(0)),
        quote("V(x3,x4)", 0.628, v(&[2, 3])),
    ];
    let agent = 2;
    let allocation_true = greedy_max_baseline(&instance);
    let lowered = instance.with_cost(agent, DEMO_LOWERED_COST).expect("cost within budget");
    let allocation_lowered = greedy_max_baseline(&lowered);
    NonMonotonicityDemo {
        instance,
        agent,
        lowered_cost: DEMO_LOWERED_COST,
        numerics,
        allocation_true,
        allocation_lowered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    #[test]
    fn two_orthogonal_items_at_half_budget() {
        let b = 1.0;
        let inst = Instance::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], vec![b / 2.0, b / 2.0], b).unwrap();
        let opt = brute_force_opt(&inst).unwrap();
        assert!((opt.value - 2.0 * LN_2).abs() < 1e-12);
        assert_eq!(opt.set, [0, 1]);
    }

    #[test]
    fn pair_over_budget_keeps_the_better_single() {
        // costs above B are rejected by Instance, so the empty optimum cannot occur
        assert!(Instance::from_rows(&[&[1.0]], vec![1.0], 0.5).is_err());
        let inst = Instance::from_rows(&[&[1.0], &[0.5]], vec![0.3, 0.3], 0.5).unwrap();
        let opt = brute_force_opt(&inst).unwrap();
        assert_eq!(opt.set, [0]);
        assert!((opt.value - LN_2).abs() < 1e-15);
    }

    #[test]
    fn parts_merge_to_the_whole() {
        let inst = Instance::from_rows(
            &[&[1.0, 0.0], &[0.6, 0.8], &[0.0, 0.7], &[0.5, 0.5], &[0.9, -0.1]],
            vec![0.3, 0.5, 0.2, 0.4, 0.6],
            1.0,
        )
        .unwrap();
        let whole = brute_force_opt(&inst).unwrap();
        let merged = (0..8).filter_map(|p| brute_force_part(&inst, 3, p).unwrap()).reduce(BestSubset::merge).unwrap();
        assert_eq!(whole, merged);
    }

    #[test]
    fn demo_flip_and_baseline_sets() {
        let demo = non_monotonicity_demo();
        assert_eq!(demo.allocation_true, [1, 2]);
        assert_eq!(demo.allocation_lowered, [0]);
        assert!(demo.allocation_flips());
    }

    #[test]
    fn quoted_numeric_conventions() {
        let q = |quoted, computed| QuotedNumeric { label: "", quoted, computed };
        assert!(q(0.628, 0.628609).agrees());
        assert!(q(0.335, 0.334715).agrees());
        assert!(q(0.334, 0.334715).agrees());
        assert!(!q(0.734, 0.735427).agrees());
    }
}
