mod common;

use common::{random_instance, random_lambda, reference_logdet, rng, subsets};
use expdesign::{
    concave_gradient, concave_hessian, concave_relaxation, multilinear_exact, multilinear_monte_carlo, value,
    FractionalPoint, Instance,
};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::LN_2;

fn point(lambda: Vec<f64>) -> FractionalPoint {
    FractionalPoint::new(lambda).unwrap()
}

/// `F` by summing `P(S)·V(S)` over all subsets, from scratch.
fn reference_multilinear(inst: &Instance, lambda: &[f64]) -> f64 {
    let n = inst.n();
    subsets(n)
        .map(|set| {
            let p: f64 = (0..n).map(|i| if set.contains(&i) { lambda[i] } else { 1.0 - lambda[i] }).product();
            p * reference_logdet(inst, &common::indicator(n, &set))
        })
        .sum()
}

#[test]
fn hand_computed_values() {
    let one = Instance::from_rows(&[&[1.0]], vec![0.5], 1.0).unwrap();
    assert!((concave_relaxation(&one, &point(vec![0.5])).unwrap() - 1.5f64.ln()).abs() < 1e-15);
    assert!((multilinear_exact(&one, &point(vec![0.5])).unwrap() - 0.5 * LN_2).abs() < 1e-15);
    assert_eq!(concave_relaxation(&one, &point(vec![0.0])).unwrap(), 0.0);
    let h = concave_hessian(&one, &point(vec![0.0])).unwrap();
    assert!((h[0] + 1.0).abs() < 1e-15);

    let pair = Instance::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], vec![0.5, 0.5], 1.0).unwrap();
    assert!((multilinear_exact(&pair, &point(vec![0.5, 0.5])).unwrap() - LN_2).abs() < 1e-15);
}

#[test]
fn extensions_agree_with_value_at_indicators() {
    let mut r = rng(10);
    for _ in 0..20 {
        let n = 1 + (r.random::<u32>() % 10) as usize;
        let inst = random_instance(&mut r, n, 3, 1.0);
        let set: Vec<usize> = (0..n).filter(|_| r.random::<bool>()).collect();
        let p = FractionalPoint::indicator(n, &set).unwrap();
        let v = value(&inst, &set).unwrap();
        assert!((concave_relaxation(&inst, &p).unwrap() - v).abs() < 1e-12);
        assert!((multilinear_exact(&inst, &p).unwrap() - v).abs() < 1e-12);
        let mc = multilinear_monte_carlo(&inst, &p, 50, 7).unwrap();
        assert_eq!(mc.stderr, 0.0);
        assert!((mc.estimate - v).abs() < 1e-12);
    }
}

#[test]
fn exact_multilinear_matches_enumeration() {
    let mut r = rng(11);
    for _ in 0..30 {
        let inst = random_instance(&mut r, 7, 3, 1.0);
        let lambda = random_lambda(&mut r, 7);
        let f = multilinear_exact(&inst, &point(lambda.clone())).unwrap();
        let reference = reference_multilinear(&inst, &lambda);
        assert!((f - reference).abs() < 1e-12, "{f} vs {reference}");
    }
}

#[test]
fn sandwich_on_grid_and_random_points() {
    let mut r = rng(12);
    for _ in 0..200 {
        let n = 1 + (r.random::<u32>() % 12) as usize;
        let d = 1 + (r.random::<u32>() % 4) as usize;
        let inst = random_instance(&mut r, n, d, 1.0);
        let lambda = if r.random::<bool>() {
            random_lambda(&mut r, n)
        } else {
            (0..n).map(|_| f64::from(r.random::<u32>() % 5) / 4.0).collect()
        };
        let p = point(lambda);
        let l = concave_relaxation(&inst, &p).unwrap();
        let f = multilinear_exact(&inst, &p).unwrap();
        assert!(0.5 * l - 1e-9 <= f && f <= l + 1e-9, "L = {l}, F = {f}");
    }
}

#[test]
fn monte_carlo_tracks_exact_value() {
    let mut r = rng(13);
    let inst = random_instance(&mut r, 8, 3, 1.0);
    let lambda = point(random_lambda(&mut r, 8));
    let exact = multilinear_exact(&inst, &lambda).unwrap();
    let mut within = 0;
    for seed in 0..100 {
        let mc = multilinear_monte_carlo(&inst, &lambda, 20_000, seed).unwrap();
        if (mc.estimate - exact).abs() <= 4.0 * mc.stderr {
            within += 1;
        }
    }
    assert!(within >= 99, "{within} of 100 within 4 standard errors");
    let a = multilinear_monte_carlo(&inst, &lambda, 1000, 42).unwrap();
    let b = multilinear_monte_carlo(&inst, &lambda, 1000, 42).unwrap();
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn derivatives_match_finite_differences() {
    let mut r = rng(14);
    let h = 1e-5;
    for _ in 0..100 {
        let n = 5;
        let inst = random_instance(&mut r, n, 3, 1.0);
        // keep the stencil inside [0, 1]
        let lambda: Vec<f64> = (0..n).map(|_| r.random_range(2.0 * h..1.0 - 2.0 * h)).collect();
        let g = concave_gradient(&inst, &point(lambda.clone())).unwrap();
        let hess = concave_hessian(&inst, &point(lambda.clone())).unwrap();
        let bound = inst.norm_floor() / f64::from(1u32 << n);
        for i in 0..n {
            assert!(g[i] >= bound - 1e-12 && g[i] <= 1.0 + 1e-12);
            let mut up = lambda.clone();
            let mut down = lambda.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (concave_relaxation(&inst, &point(up.clone())).unwrap()
                - concave_relaxation(&inst, &point(down.clone())).unwrap())
                / (2.0 * h);
            assert!(relative_close(g[i], fd, 1e-5), "grad {i}: {} vs {fd}", g[i]);
            let g_up = concave_gradient(&inst, &point(up)).unwrap();
            let g_down = concave_gradient(&inst, &point(down)).unwrap();
            assert!(hess[i * n + i] <= 0.0);
            for j in 0..n {
                let fd = (g_up[j] - g_down[j]) / (2.0 * h);
                assert!(relative_close(hess[j * n + i], fd, 1e-4), "hess {j},{i}: {} vs {fd}", hess[j * n + i]);
                assert_eq!(hess[i * n + j], hess[j * n + i]);
            }
        }
    }
}

#[test]
fn gradient_at_zero_is_squared_norm() {
    let mut r = rng(15);
    let inst = random_instance(&mut r, 6, 4, 1.0);
    let g = concave_gradient(&inst, &point(vec![0.0; 6])).unwrap();
    for (i, gi) in g.iter().enumerate() {
        let norm: f64 = inst.row(i).iter().map(|v| v * v).sum();
        assert!((gi - norm).abs() < 1e-15);
    }
}

#[test]
fn rejects_points_outside_the_cube() {
    assert!(FractionalPoint::new(vec![0.5, 1.2]).is_err());
    assert!(FractionalPoint::new(vec![-0.1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn relaxation_is_concave(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 6, 3, 1.0);
        let a = random_lambda(&mut r, 6);
        let b = random_lambda(&mut r, 6);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (t * x + (1.0 - t) * y).clamp(0.0, 1.0)).collect();
        let la = concave_relaxation(&inst, &point(a)).unwrap();
        let lb = concave_relaxation(&inst, &point(b)).unwrap();
        let lm = concave_relaxation(&inst, &point(mid)).unwrap();
        prop_assert!(lm >= t * la + (1.0 - t) * lb - 1e-9);
    }

    #[test]
    fn relaxation_increases_in_each_coordinate(seed in any::<u64>(), i in 0usize..6, step in 1e-6f64..0.5) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 6, 3, 1.0);
        let base = random_lambda(&mut r, 6);
        let mut raised = base.clone();
        raised[i] = (raised[i] + step).min(1.0);
        prop_assume!(raised[i] > base[i]);
        let g = concave_gradient(&inst, &point(base.clone())).unwrap();
        prop_assert!(g.iter().all(|&v| v > 0.0));
        prop_assert!(concave_relaxation(&inst, &point(raised)).unwrap() > concave_relaxation(&inst, &point(base)).unwrap());
    }
}
