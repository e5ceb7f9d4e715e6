mod common;

use common::{random_instance, rng, subsets};
use expdesign::solver::{monotone_accuracy, monotone_floor, NewtonSystem};
use expdesign::{concave_relaxation, solve_barrier, solve_monotone, value, Instance, SolverConfig};
use rand::Rng;
use std::f64::consts::LN_2;

fn config() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn single_item_reaches_log_two() {
    let inst = Instance::from_rows(&[&[1.0, 0.0]], vec![1.0], 1.0).unwrap();
    let report = solve_barrier(&inst, 0.0, 1e-9, &[], &config()).unwrap();
    assert!((report.l_hat - LN_2).abs() <= 1e-9);
    assert!(report.gap_certificate <= report.eps_prime_used);
}

#[test]
fn identical_items_share_the_budget() {
    let inst = Instance::from_rows(&[&[1.0], &[1.0]], vec![1.0, 1.0], 1.0).unwrap();
    let report = solve_barrier(&inst, 0.0, 1e-9, &[], &config()).unwrap();
    assert!((report.l_hat - LN_2).abs() <= 1e-9);
}

#[test]
fn estimate_dominates_every_feasible_set() {
    let mut r = rng(30);
    for _ in 0..30 {
        let n = 1 + (r.random::<u32>() % 10) as usize;
        let inst = random_instance(&mut r, n, 3, 0.7);
        let eps = 1e-8;
        let report = solve_barrier(&inst, 0.0, eps, &[], &config()).unwrap();
        for set in subsets(n) {
            let cost: f64 = set.iter().map(|&i| inst.cost(i)).sum();
            if cost <= inst.budget() {
                assert!(report.l_hat >= value(&inst, &set).unwrap() - eps);
            }
        }
    }
}

#[test]
fn certificate_is_sound() {
    let mut r = rng(31);
    for _ in 0..20 {
        let inst = random_instance(&mut r, 8, 3, 0.5);
        let report = solve_monotone(&inst, &[], &config()).unwrap();
        let alpha = report.alpha_used;
        let lambda = report.lambda_hat.lambda();
        assert!(lambda.iter().all(|&l| l > alpha && l < 1.0));
        assert!(report.lambda_hat.spend(&inst) < inst.budget());
        let l = concave_relaxation(&inst, &report.lambda_hat).unwrap();
        assert!((l - report.l_hat).abs() <= 1e-12);
        assert!(report.gap_certificate <= report.eps_prime_used);
        // a tighter solve never lands below l_hat by more than the certificate
        let tight = solve_barrier(&inst, alpha, 1e-12, &[], &config()).unwrap();
        assert!(tight.l_hat <= report.l_hat + report.gap_certificate + 1e-12);
    }
}

#[test]
fn newton_systems_agree() {
    let mut r = rng(32);
    for _ in 0..10 {
        let inst = random_instance(&mut r, 12, 2, 0.3);
        let dense = SolverConfig { newton_system: NewtonSystem::Dense, ..config() };
        let low = SolverConfig { newton_system: NewtonSystem::LowRank, ..config() };
        let a = solve_barrier(&inst, 1e-4, 1e-10, &[], &dense).unwrap();
        let b = solve_barrier(&inst, 1e-4, 1e-10, &[], &low).unwrap();
        assert!((a.l_hat - b.l_hat).abs() <= 2e-10);
    }
}

#[test]
fn excluded_items_are_removed() {
    let mut r = rng(33);
    let inst = random_instance(&mut r, 6, 3, 0.5);
    let report = solve_barrier(&inst, 0.01, 1e-10, &[1, 4], &config()).unwrap();
    assert_eq!(report.lambda_hat.lambda()[1], 0.0);
    assert_eq!(report.lambda_hat.lambda()[4], 0.0);
    let reduced = inst.restrict(&[0, 2, 3, 5]).unwrap();
    let direct = solve_barrier(&reduced, 0.01, 1e-10, &[], &config()).unwrap();
    assert!((report.l_hat - direct.l_hat).abs() <= 2e-10);
    let nothing = solve_monotone(&inst, &[0, 1, 2, 3, 4, 5], &config()).unwrap();
    assert_eq!(nothing.l_hat, 0.0);
}

#[test]
fn floor_changes_optimum_by_at_most_alpha_n_squared() {
    let mut r = rng(34);
    for _ in 0..20 {
        let n = 6;
        let inst = random_instance(&mut r, n, 3, 0.6);
        let alpha = monotone_floor(0.01, 0.05, inst.budget(), n);
        let acc = 1e-11;
        let floored = solve_barrier(&inst, alpha, acc, &[], &config()).unwrap().l_hat;
        let free = solve_barrier(&inst, 0.0, acc, &[], &config()).unwrap().l_hat;
        assert!((floored - free).abs() <= alpha * (n * n) as f64 + 2.0 * acc);
    }
}

#[test]
fn lowering_a_cost_raises_the_floored_optimum() {
    let mut r = rng(35);
    let delta = 0.05;
    for _ in 0..20 {
        let n = 6;
        let inst = random_instance(&mut r, n, 3, 0.6);
        let alpha = monotone_floor(0.01, delta, inst.budget(), n);
        let gain = alpha * delta * inst.norm_floor() / (f64::from(1u32 << n) * inst.budget());
        let acc = 1e-12;
        let base = solve_barrier(&inst, alpha, acc, &[], &config()).unwrap().l_hat;
        for i in 0..n {
            if inst.cost(i) < delta {
                continue;
            }
            let cheaper = inst.with_cost(i, inst.cost(i) - delta).unwrap();
            let raised = solve_barrier(&cheaper, alpha, acc, &[], &config()).unwrap().l_hat;
            assert!(raised - base >= gain - 2.0 * acc, "item {i}: {} < {gain}", raised - base);
        }
    }
}

#[test]
fn monotone_estimate_is_accurate_and_delta_decreasing() {
    let mut r = rng(36);
    let cfg = SolverConfig::with_accuracy(0.01, 0.05);
    for _ in 0..10 {
        let n = 5;
        let inst = random_instance(&mut r, n, 3, 0.5);
        let report = solve_monotone(&inst, &[], &cfg).unwrap();
        let reference = solve_barrier(&inst, 0.0, report.eps_prime_used / 100.0, &[], &cfg).unwrap();
        assert!((report.l_hat - reference.l_hat).abs() <= cfg.epsilon);
        for i in 0..n {
            for bump in [cfg.delta, 2.0 * cfg.delta] {
                if inst.cost(i) + bump > inst.budget() {
                    continue;
                }
                let dearer = inst.with_cost(i, inst.cost(i) + bump).unwrap();
                assert!(solve_monotone(&dearer, &[], &cfg).unwrap().l_hat <= report.l_hat);
            }
            let cheaper = inst.with_cost(i, inst.cost(i) * 0.5).unwrap();
            let lowered = solve_monotone(&cheaper, &[], &cfg).unwrap().l_hat;
            assert!(lowered >= report.l_hat - 2.0 * report.eps_prime_used);
        }
    }
}

#[test]
fn tiny_accuracy_targets_are_clamped() {
    let mut r = rng(37);
    let inst = random_instance(&mut r, 40, 3, 0.05);
    let alpha = monotone_floor(0.01, 0.05, 1.0, 40);
    assert!(monotone_accuracy(alpha, 0.05, inst.norm_floor(), 1.0, 40) < 1e-12);
    let report = solve_monotone(&inst, &[], &config()).unwrap();
    assert!(report.eps_prime_clamped);
    assert_eq!(report.eps_prime_used, expdesign::solver::EPS_PRIME_FLOOR);
    assert!(report.gap_certificate <= report.eps_prime_used);
}

#[test]
fn invalid_parameters_are_rejected() {
    let inst = Instance::from_rows(&[&[1.0], &[0.5]], vec![0.5, 0.5], 1.0).unwrap();
    assert!(solve_barrier(&inst, 0.5, 1e-6, &[], &config()).is_err());
    assert!(solve_barrier(&inst, 0.0, 0.0, &[], &config()).is_err());
    assert!(solve_barrier(&inst, 0.0, 1e-6, &[7], &config()).is_err());
    assert!(solve_monotone(&inst, &[], &SolverConfig::with_accuracy(2.0, 0.1)).is_err());
}
