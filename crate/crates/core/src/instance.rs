use alloc::vec::Vec;

use crate::linalg::Cholesky;
use crate::{Error, Result};

/// Slack allowed above 1 on squared row norms, for rows normalized in
/// floating point.
const NORM_SLACK: f64 = 1e-12;

/// A procurement instance: `n` experiments with features in `R^d`, their
/// (reported) costs, the buyer's budget and an optional prior precision
/// matrix.
///
/// Immutable once built; every constructor validates the invariants
/// `b ≤ ‖xᵢ‖² ≤ 1` and `0 ≤ cᵢ ≤ B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    dim: usize,
    features: Vec<f64>,
    costs: Vec<f64>,
    budget: f64,
    norm_floor: f64,
    prior: Option<Vec<f64>>,
}

impl Instance {
    /// Builds an instance from row-major `features` (`n × dim`).
    pub fn new(features: Vec<f64>, dim: usize, costs: Vec<f64>, budget: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInstance("dimension must be at least 1"));
        }
        let n = costs.len();
        if n == 0 {
            return Err(Error::InvalidInstance("at least one experiment is required"));
        }
        if features.len() != n * dim {
            return Err(Error::InvalidInstance("feature matrix shape does not match costs"));
        }
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(Error::InvalidInstance("budget must be positive and finite"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("features must be finite"));
        }
        let mut norm_floor = f64::INFINITY;
        for (row, x) in features.chunks_exact(dim).enumerate() {
            let norm_sq: f64 = x.iter().map(|v| v * v).sum();
            if !(norm_sq > 0.0) || norm_sq > 1.0 + NORM_SLACK {
                return Err(Error::RowNorm { row, norm_sq });
            }
            norm_floor = norm_floor.min(norm_sq);
        }
        for (index, &cost) in costs.iter().enumerate() {
            if !(0.0..=budget).contains(&cost) {
                return Err(Error::CostOutOfRange { index, cost });
            }
        }
        Ok(Self { n, dim, features, costs, budget, norm_floor, prior: None })
    }

    /// Builds an instance from explicit rows.
    pub fn from_rows(rows: &[&[f64]], costs: Vec<f64>, budget: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInstance("rows have different lengths"));
        }
        let features = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(features, dim, costs, budget)
    }

    /// Attaches a prior precision matrix `R` (row-major `dim × dim`), which
    /// must be symmetric positive definite.
    pub fn with_prior(mut self, prior: Vec<f64>) -> Result<Self> {
        let d = self.dim;
        if prior.len() != d * d || prior.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("prior must be a finite dim × dim matrix"));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (prior[i * d + j], prior[j * d + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidInstance("prior must be symmetric"));
                }
            }
        }
        Cholesky::factor(&prior, d).ok_or(Error::NotPositiveDefinite)?;
        self.prior = Some(prior);
        Ok(self)
    }

    /// Checks a caller-supplied norm floor `b` against the data: it must be
    /// positive and no larger than the smallest squared row norm. The stored
    /// floor is always the recomputed minimum.
    pub fn check_norm_floor(&self, supplied: f64) -> Result<()> {
        if !(supplied > 0.0) || supplied > self.norm_floor * (1.0 + 1e-12) {
            return Err(Error::NormFloor { supplied, observed: self.norm_floor });
        }
        Ok(())
    }

    /// A copy of the instance with item `index` reporting `cost`.
    pub fn with_cost(&self, index: usize, cost: f64) -> Result<Self> {
        self.check_index(index)?;
        if !(0.0..=self.budget).contains(&cost) {
            return Err(Error::CostOutOfRange { index, cost });
        }
        let mut out = self.clone();
        out.costs[index] = cost;
        Ok(out)
    }

    /// The sub-instance made of the listed items, in the given order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(keep.len() * self.dim);
        let mut costs = Vec::with_capacity(keep.len());
        for &i in keep {
            self.check_index(i)?;
            features.extend_from_slice(self.row(i));
            costs.push(self.costs[i]);
        }
        let mut out = Self::new(features, self.dim, costs, self.budget)?;
        out.prior = self.prior.clone();
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major `n × dim` feature matrix.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.costs[i]
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// `b = minᵢ ‖xᵢ‖²`.
    pub fn norm_floor(&self) -> f64 {
        self.norm_floor
    }

    pub fn prior(&self) -> Option<&[f64]> {
        self.prior.as_deref()
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.n {
            return Err(Error::IndexOutOfRange { index, n: self.n });
        }
        Ok(())
    }
}
