#![allow(dead_code)]

use expdesign::Instance;
use expdesign_harness::{generate_instance, CostModel, GeneratorConfig};

pub fn generated(n: usize, d: usize, cost_model: CostModel, seed: u64) -> Instance {
    generate_instance(&GeneratorConfig::new(n, d, cost_model, seed)).unwrap().instance
}

/// Many cheap items in a high dimension, where the greedy branch wins.
pub fn greedy_regime(seed: u64) -> Instance {
    let config = GeneratorConfig { cost_ceiling: 0.03, ..GeneratorConfig::new(24, 20, CostModel::Uniform, seed) };
    generate_instance(&config).unwrap().instance
}

/// `log det(I + Σ wᵢxᵢxᵢᵀ)` by Gaussian elimination with partial pivoting.
pub fn reference_logdet(instance: &Instance, weights: &[f64]) -> f64 {
    let d = instance.dim();
    let mut a = vec![0.0; d * d];
    for k in 0..d {
        a[k * d + k] = 1.0;
    }
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let x = instance.row(i);
        for r in 0..d {
            for c in 0..d {
                a[r * d + c] += w * x[r] * x[c];
            }
        }
    }
    let mut logdet = 0.0;
    for col in 0..d {
        let pivot = (col..d).max_by(|&p, &q| a[p * d + col].abs().total_cmp(&a[q * d + col].abs())).unwrap();
        if pivot != col {
            for c in 0..d {
                a.swap(pivot * d + c, col * d + c);
            }
        }
        let p = a[col * d + col];
        logdet += p.abs().ln();
        for r in col + 1..d {
            let f = a[r * d + col] / p;
            for c in col..d {
                a[r * d + c] -= f * a[col * d + c];
            }
        }
    }
    logdet
}

fn mask_weights(n: usize, mask: u32) -> Vec<f64> {
    (0..n).map(|i| f64::from(mask >> i & 1)).collect()
}

/// `V` of every subset, indexed by bit mask.
pub fn all_values(instance: &Instance) -> Vec<f64> {
    let n = instance.n();
    (0u32..1 << n).map(|m| reference_logdet(instance, &mask_weights(n, m))).collect()
}

/// `F(λ) = Σ_S P(S)·V(S)` summed over all subsets.
pub fn reference_multilinear(values: &[f64], lambda: &[f64]) -> f64 {
    let n = lambda.len();
    (0..values.len())
        .map(|m| {
            let p: f64 = (0..n).map(|i| if m >> i & 1 == 1 { lambda[i] } else { 1.0 - lambda[i] }).product();
            p * values[m]
        })
        .sum()
}

/// Best budget-feasible value over all subsets.
pub fn reference_opt(instance: &Instance, values: &[f64]) -> f64 {
    let n = instance.n();
    (0..values.len())
        .filter(|&m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| instance.cost(i)).sum::<f64>() <= instance.budget())
        .map(|m| values[m])
        .fold(0.0, f64::max)
}
