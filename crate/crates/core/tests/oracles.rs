mod common;

use common::{random_instance, rng, subsets};
use expdesign::{
    brute_force_opt, greedy_max_baseline, max_singleton, non_monotonicity_demo, solve_barrier, value, Instance,
    SolverConfig,
};
use rand::Rng;
use std::f64::consts::{E, PI};

#[test]
fn brute_force_matches_plain_enumeration() {
    let mut r = rng(50);
    for _ in 0..30 {
        let n = 1 + (r.random::<u32>() % 10) as usize;
        let inst = random_instance(&mut r, n, 3, 0.6);
        let mut best = (0.0, Vec::new());
        for set in subsets(n) {
            let cost: f64 = set.iter().map(|&i| inst.cost(i)).sum();
            if cost <= inst.budget() {
                let v = value(&inst, &set).unwrap();
                if v > best.0 + 1e-12 {
                    best = (v, set);
                }
            }
        }
        let opt = brute_force_opt(&inst).unwrap();
        assert!((opt.value - best.0).abs() < 1e-12);
        let baseline = greedy_max_baseline(&inst);
        assert!(opt.value >= value(&inst, &baseline).unwrap() - 1e-12);
    }
}

#[test]
fn brute_force_refuses_large_instances() {
    let mut r = rng(51);
    let inst = random_instance(&mut r, 23, 2, 0.01);
    assert!(brute_force_opt(&inst).is_err());
}

#[test]
fn baseline_on_a_single_item() {
    let inst = Instance::from_rows(&[&[0.7]], vec![0.4], 1.0).unwrap();
    assert_eq!(greedy_max_baseline(&inst), [0]);
}

#[test]
fn demo_numerics_follow_closed_forms() {
    let demo = non_monotonicity_demo();
    let (cos2, sin2) = ((PI / 5.0).cos().powi(2), (PI / 5.0).sin().powi(2));
    let expected = [
        2f64.ln() / 2.5,
        1.5f64.ln(),
        1.5f64.ln(),
        1.25f64.ln() * 1.5,
        (1.5 - cos2 / 6.0).ln(),
        1.5 * (1.25 - sin2 / 12.0).ln(),
        (1.5 - cos2 / 6.0).ln(),
        1.5 * 1.25f64.ln(),
        1.5f64.ln() + (1.5 - cos2 / 6.0).ln(),
        2f64.ln(),
        1.5f64.ln() + 1.25f64.ln(),
    ];
    assert_eq!(demo.numerics.len(), expected.len());
    for (q, e) in demo.numerics.iter().zip(expected) {
        assert!((q.computed - e).abs() < 1e-14, "{}: {} vs {e}", q.label, q.computed);
    }
    assert_eq!(max_singleton(&demo.instance).0, 0);
    assert!(demo.allocation_flips());
    assert!(demo.lowered_cost < 1.0 && demo.lowered_cost > 2.5 - 1.0 - 2.0 / 3.0);
}

#[test]
fn relaxation_brackets_the_optimum() {
    let mut r = rng(52);
    let cfg = SolverConfig::default();
    let eps = 1e-9;
    for _ in 0..30 {
        let n = 1 + (r.random::<u32>() % 12) as usize;
        let d = 1 + (r.random::<u32>() % 4) as usize;
        let inst = random_instance(&mut r, n, d, 1.0);
        let opt = brute_force_opt(&inst).unwrap().value;
        let l = solve_barrier(&inst, 0.0, eps, &[], &cfg).unwrap().l_hat;
        let v_star = max_singleton(&inst).1;
        assert!(opt <= l + eps);
        assert!(l <= 2.0 * opt + 2.0 * v_star + eps);
    }
}

#[test]
fn full_information_greedy_ratio() {
    let mut r = rng(53);
    for _ in 0..100 {
        let n = 1 + (r.random::<u32>() % 10) as usize;
        let inst = random_instance(&mut r, n, 3, 1.0);
        let opt = brute_force_opt(&inst).unwrap().value;
        let v = value(&inst, &greedy_max_baseline(&inst)).unwrap();
        assert!(opt <= 5.0 * E / (E - 1.0) * v + 1e-12);
    }
}
