//! Property suite run from the command line on generated instances.

use expdesign::rounding::FRACTIONAL_TOL;
use expdesign::{
    brute_force_opt, concave_gradient, concave_relaxation, max_singleton, multilinear_exact, pipage_round,
    run_mechanism, solve_barrier, solve_monotone, value, ExactMultilinear, FractionalPoint, Instance, MechanismConfig,
    SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::generate::{generate_instance, CostModel, GeneratorConfig};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Smallest slack seen; negative on failure.
    pub worst_slack: f64,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Property = fn(&Instance, &mut ChaCha8Rng, &SolverConfig) -> Result<f64>;

fn instance_for(seed: u64, case: usize, max_n: usize) -> Result<(Instance, ChaCha8Rng)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (case as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = rng.random_range(2..=max_n);
    let d = rng.random_range(1..=4);
    let g = GeneratorConfig::new(n, d, CostModel::Uniform, rng.random());
    Ok((generate_instance(&g)?.instance, rng))
}

/// Runs every property on `cases` instances derived from `seed`.
pub fn run_properties(seed: u64, cases: usize, solver: &SolverConfig) -> Result<Vec<PropertyResult>> {
    let table: [(&'static str, usize, Property); 7] = [
        ("monotone_submodular", 8, monotone_submodular),
        ("sandwich", 12, sandwich),
        ("gradient_bounds", 10, gradient_bounds),
        ("pipage", 10, pipage),
        ("relaxation_bracket", 10, relaxation_bracket),
        ("delta_decreasing", 6, delta_decreasing),
        ("mechanism_invariants", 10, mechanism_invariants),
    ];
    table
        .iter()
        .map(|&(name, max_n, property)| {
            let slacks = (0..cases)
                .into_par_iter()
                .map(|case| {
                    let (instance, mut rng) = instance_for(seed, case, max_n)?;
                    property(&instance, &mut rng, solver)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(PropertyResult {
                name,
                cases,
                failures: slacks.iter().filter(|s| s.is_nan() || **s < 0.0).count(),
                worst_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}

fn subset(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

fn monotone_submodular(inst: &Instance, _: &mut ChaCha8Rng, _: &SolverConfig) -> Result<f64> {
    let n = inst.n();
    let values = (0u32..1 << n).map(|m| value(inst, &subset(m, n))).collect::<expdesign::Result<Vec<_>>>()?;
    let mut worst = f64::INFINITY;
    for s in 0u32..1 << n {
        for i in (0..n).filter(|&i| s >> i & 1 == 0) {
            let gain_s = values[(s | 1 << i) as usize] - values[s as usize];
            worst = worst.min(gain_s);
            for j in (0..n).filter(|&j| j != i && s >> j & 1 == 0) {
                let t = s | 1 << j;
                let gain_t = values[(t | 1 << i) as usize] - values[t as usize];
                worst = worst.min(gain_s - gain_t + 1e-9);
            }
        }
    }
    Ok(worst)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> FractionalPoint {
    FractionalPoint::new((0..n).map(|_| rng.random::<f64>()).collect()).expect("values lie in [0, 1)")
}

fn sandwich(inst: &Instance, rng: &mut ChaCha8Rng, _: &SolverConfig) -> Result<f64> {
    let p = random_point(rng, inst.n());
    let l = concave_relaxation(inst, &p)?;
    let f = multilinear_exact(inst, &p)?;
    Ok((f - 0.5 * l + 1e-9).min(l + 1e-9 - f))
}

fn gradient_bounds(inst: &Instance, rng: &mut ChaCha8Rng, _: &SolverConfig) -> Result<f64> {
    let p = random_point(rng, inst.n());
    let g = concave_gradient(inst, &p)?;
    let lower = inst.norm_floor() / 2f64.powi(inst.n() as i32);
    Ok(g.iter().map(|&v| (v - lower + 1e-12).min(1.0 + 1e-12 - v)).fold(f64::INFINITY, f64::min))
}

fn pipage(inst: &Instance, rng: &mut ChaCha8Rng, _: &SolverConfig) -> Result<f64> {
    let mut lambda: Vec<f64> = (0..inst.n()).map(|_| rng.random::<f64>()).collect();
    let spend: f64 = lambda.iter().zip(inst.costs()).map(|(l, c)| l * c).sum();
    if spend > inst.budget() {
        lambda.iter_mut().for_each(|l| *l *= inst.budget() / spend * 0.999);
    }
    let p = FractionalPoint::new(lambda)?;
    let out = pipage_round(inst, &p, &ExactMultilinear)?;
    let gain = multilinear_exact(inst, &out.point)? - multilinear_exact(inst, &p)? + 1e-9;
    let spend_drift = 1e-9 - (out.point.spend(inst) - p.spend(inst)).abs();
    let fractional = if out.point.fractional_count(FRACTIONAL_TOL) <= 1 { 1.0 } else { -1.0 };
    Ok(gain.min(spend_drift).min(fractional))
}

fn relaxation_bracket(inst: &Instance, _: &mut ChaCha8Rng, solver: &SolverConfig) -> Result<f64> {
    let eps = 1e-9;
    let opt = brute_force_opt(inst)?.value;
    let l = solve_barrier(inst, 0.0, eps, &[], solver)?.l_hat;
    let v_star = max_singleton(inst).1;
    Ok((l + eps - opt).min(2.0 * opt + 2.0 * v_star + eps - l))
}

fn delta_decreasing(inst: &Instance, _: &mut ChaCha8Rng, solver: &SolverConfig) -> Result<f64> {
    let base = solve_monotone(inst, &[], solver)?.l_hat;
    let mut worst = f64::INFINITY;
    for i in 0..inst.n() {
        for bump in [solver.delta, 2.0 * solver.delta] {
            if inst.cost(i) + bump <= inst.budget() {
                let raised = solve_monotone(&inst.with_cost(i, inst.cost(i) + bump)?, &[], solver)?.l_hat;
                worst = worst.min(base - raised);
            }
        }
    }
    Ok(worst)
}

fn mechanism_invariants(inst: &Instance, _: &mut ChaCha8Rng, solver: &SolverConfig) -> Result<f64> {
    let config = MechanismConfig { solver: solver.clone(), pay_tol: None };
    let out = run_mechanism(inst, &config)?;
    Ok(if out.invariant_violations(inst).is_empty() { 1.0 } else { -1.0 })
}
