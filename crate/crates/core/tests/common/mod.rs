#![allow(dead_code)]

use expdesign::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random rows with `‖x‖² ∈ [0.25, 1]` and costs uniform on
/// `[0, cost_ceiling·B]`, `B = 1`.
pub fn random_instance(rng: &mut impl Rng, n: usize, d: usize, cost_ceiling: f64) -> Instance {
    let mut features = Vec::with_capacity(n * d);
    for _ in 0..n {
        let mut row: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
        let target = rng.random_range(0.25f64..=1.0).sqrt();
        for v in &mut row {
            *v *= target / norm;
        }
        features.extend(row);
    }
    let costs = (0..n).map(|_| rng.random_range(0.0..=cost_ceiling)).collect();
    Instance::new(features, d, costs, 1.0).unwrap()
}

pub fn random_lambda(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
}

/// Reference `log det(I + Σ wᵢxᵢxᵢᵀ)` by Gaussian elimination with partial
/// pivoting, independent of the library's factorization.
pub fn reference_logdet(instance: &Instance, weights: &[f64]) -> f64 {
    let d = instance.dim();
    let mut a = vec![0.0; d * d];
    for k in 0..d {
        a[k * d + k] = 1.0;
    }
    for (i, &w) in weights.iter().enumerate() {
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

pub fn indicator(n: usize, set: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &i in set {
        w[i] = 1.0;
    }
    w
}
