//! Random instance generators.

use std::collections::BTreeMap;

use expdesign::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Smallest and largest squared row norm drawn by the generators.
pub const NORM_SQ_RANGE: (f64, f64) = (0.25, 1.0);

/// Surcharge above `B/2` on the two orthogonal items of the
/// adversarial-singleton model, as a fraction of `B`.
pub const ADVERSARIAL_SURCHARGE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CostModel {
    /// `cᵢ ~ U[0, ceiling·B]`.
    Uniform,
    /// `cᵢ = ceiling·B·‖xᵢ‖²`.
    ProportionalToNorm,
    /// Items 0 and 1 are `e₁` and `e₂` costing `B/2 + 10⁻³·B` each, so only
    /// one of them fits; the rest are random rows costing `U[B/2, B]`.
    AdversarialSingleton,
}

impl CostModel {
    pub fn name(self) -> &'static str {
        match self {
            CostModel::Uniform => "uniform",
            CostModel::ProportionalToNorm => "proportional-to-norm",
            CostModel::AdversarialSingleton => "adversarial-singleton",
        }
    }
}

fn default_budget() -> f64 {
    1.0
}

fn default_ceiling() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n: usize,
    pub d: usize,
    pub cost_model: CostModel,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: f64,
    /// Scales the cost range of the uniform and proportional models.
    #[serde(default = "default_ceiling")]
    pub cost_ceiling: f64,
}

impl GeneratorConfig {
    pub fn new(n: usize, d: usize, cost_model: CostModel, seed: u64) -> Self {
        Self { n, d, cost_model, seed, budget: default_budget(), cost_ceiling: default_ceiling() }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub metadata: BTreeMap<String, String>,
}

/// A row with a uniformly random direction and `‖x‖² ~ U[0.25, 1]`.
fn random_row(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-8 {
            let target = rng.random_range(NORM_SQ_RANGE.0..=NORM_SQ_RANGE.1).sqrt();
            return row.into_iter().map(|v| v * target / norm).collect();
        }
    }
}

pub fn generate_instance(config: &GeneratorConfig) -> Result<Generated> {
    let GeneratorConfig { n, d, cost_model, seed, budget, cost_ceiling } = *config;
    if n == 0 || d == 0 {
        return Err(HarnessError::Config("generator needs n ≥ 1 and d ≥ 1".into()));
    }
    if !(cost_ceiling > 0.0 && cost_ceiling <= 1.0) {
        return Err(HarnessError::Config("cost_ceiling must lie in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut costs = Vec::with_capacity(n);
    match cost_model {
        CostModel::Uniform | CostModel::ProportionalToNorm => {
            for _ in 0..n {
                let row = random_row(&mut rng, d);
                let cost = if cost_model == CostModel::Uniform {
                    rng.random_range(0.0..=cost_ceiling) * budget
                } else {
                    cost_ceiling * budget * row.iter().map(|v| v * v).sum::<f64>()
                };
                features.extend(row);
                costs.push(cost.min(budget));
            }
        }
        CostModel::AdversarialSingleton => {
            for i in 0..n {
                if i < 2 {
                    let mut row = vec![0.0; d];
                    row[i.min(d - 1)] = 1.0;
                    features.extend(row);
                    costs.push(budget * (0.5 + ADVERSARIAL_SURCHARGE));
                } else {
                    features.extend(random_row(&mut rng, d));
                    costs.push(rng.random_range(0.5..=1.0) * budget);
                }
            }
        }
    }
    let instance = Instance::new(features, d, costs, budget)?;
    let metadata = BTreeMap::from([
        ("generator".to_string(), "expdesign-harness".to_string()),
        ("cost_model".to_string(), cost_model.name().to_string()),
        ("seed".to_string(), seed.to_string()),
        ("cost_ceiling".to_string(), format!("{cost_ceiling:?}")),
        ("norm_sq_range".to_string(), format!("[{:?}, {:?}]", NORM_SQ_RANGE.0, NORM_SQ_RANGE.1)),
    ]);
    Ok(Generated { instance, metadata })
}
