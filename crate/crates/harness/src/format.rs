//! The versioned JSON instance file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use expdesign::Instance;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    /// Row-major `n × d`.
    pub features: Vec<f64>,
    pub costs: Vec<f64>,
    pub budget: f64,
    /// Optional lower bound on the squared row norms; checked against the
    /// data on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_floor: Option<f64>,
    /// Row-major `d × d` prior precision.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance, metadata: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: instance.n(),
            d: instance.dim(),
            features: instance.features().to_vec(),
            costs: instance.costs().to_vec(),
            budget: instance.budget(),
            norm_floor: None,
            prior: instance.prior().map(<[f64]>::to_vec),
            metadata,
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.features.len() != self.n * self.d || self.costs.len() != self.n {
            return Err(HarnessError::Schema(format!(
                "n = {}, d = {} but {} features and {} costs",
                self.n,
                self.d,
                self.features.len(),
                self.costs.len()
            )));
        }
        let mut instance = Instance::new(self.features.clone(), self.d, self.costs.clone(), self.budget)?;
        if let Some(prior) = &self.prior {
            instance = instance.with_prior(prior.clone())?;
        }
        if let Some(floor) = self.norm_floor {
            instance.check_norm_floor(floor)?;
        }
        Ok(instance)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Json(path.display().to_string(), e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instance files serialize");
        text.push('\n');
        text
    }
}

/// Loads and validates an instance file.
pub fn load_instance(path: &Path) -> Result<(Instance, BTreeMap<String, String>)> {
    let file = InstanceFile::load(path)?;
    Ok((file.to_instance()?, file.metadata))
}

/// SHA-256 over the numeric content (dimensions, then the bit patterns of
/// features, costs, budget and prior); metadata does not contribute.
pub fn instance_digest(instance: &Instance) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"expdesign-instance-v1");
    hasher.update((instance.n() as u64).to_le_bytes());
    hasher.update((instance.dim() as u64).to_le_bytes());
    let mut floats = |values: &[f64]| {
        for v in values {
            hasher.update(v.to_bits().to_le_bytes());
        }
    };
    floats(instance.features());
    floats(instance.costs());
    floats(&[instance.budget()]);
    if let Some(prior) = instance.prior() {
        floats(prior);
    }
    hex::encode(hasher.finalize())
}
