//! The D-optimality value function `V(S) = log det(I + XₛᵀXₛ)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Cholesky;
use crate::{strictly_better, Error, Instance, Result};

/// `V(S)` for an index set, via a Cholesky factorization of `A(S)`.
///
/// Duplicate indices are rejected.
pub fn value(instance: &Instance, subset: &[usize]) -> Result<f64> {
    Ok(SubsetState::from_subset(instance, subset)?.value())
}

/// A set `S` together with the Cholesky factor of `A(S) = I + XₛᵀXₛ` and the
/// cached value `V(S)`. Growing the set costs one rank-one update.
#[derive(Debug, Clone)]
pub struct SubsetState<'a> {
    instance: &'a Instance,
    members: Vec<usize>,
    in_set: Vec<bool>,
    factor: Cholesky,
    value: f64,
}

impl<'a> SubsetState<'a> {
    /// The empty set.
    pub fn new(instance: &'a Instance) -> Self {
        Self {
            instance,
            members: Vec::new(),
            in_set: vec![false; instance.n()],
            factor: Cholesky::identity(instance.dim()),
            value: 0.0,
        }
    }

    pub fn from_subset(instance: &'a Instance, subset: &[usize]) -> Result<Self> {
        let mut state = Self::new(instance);
        for &i in subset {
            state.push(i)?;
        }
        Ok(state)
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    /// Members in insertion order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.in_set.get(i).copied().unwrap_or(false)
    }

    /// Cached `V(S)`.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    fn check_new(&self, i: usize) -> Result<()> {
        self.instance.check_index(i)?;
        if self.in_set[i] {
            return Err(Error::AlreadyMember(i));
        }
        Ok(())
    }

    /// `V(S ∪ {i}) − V(S) = log(1 + xᵢᵀA(S)⁻¹xᵢ)`, by one triangular solve.
    pub fn marginal_gain(&self, i: usize) -> Result<f64> {
        self.check_new(i)?;
        let x = self.instance.row(i);
        let mut scratch = vec![0.0; x.len()];
        let q = self.factor.inverse_quadratic(x, &mut scratch);
        Ok(libm::log1p(q))
    }

    /// Adds `i` to the set in place.
    pub fn push(&mut self, i: usize) -> Result<()> {
        self.check_new(i)?;
        let mut v = self.instance.row(i).to_vec();
        self.factor.rank_one_update(&mut v);
        self.in_set[i] = true;
        self.members.push(i);
        self.value = self.factor.log_det();
        Ok(())
    }

    /// A new state with `i` added.
    pub fn extended(&self, i: usize) -> Result<Self> {
        let mut next = self.clone();
        next.push(i)?;
        Ok(next)
    }
}

/// `½[log det(R + XₛᵀXₛ) − log det R]`, the information gain under a prior
/// with precision `R` (identity when the instance carries none).
pub fn value_generalized(instance: &Instance, subset: &[usize]) -> Result<f64> {
    let d = instance.dim();
    let prior = match instance.prior() {
        Some(r) => r.to_vec(),
        None => {
            let mut r = vec![0.0; d * d];
            for i in 0..d {
                r[i * d + i] = 1.0;
            }
            r
        }
    };
    let base = Cholesky::factor(&prior, d).ok_or(Error::NotPositiveDefinite)?;
    let mut seen = vec![false; instance.n()];
    let mut grown = base.clone();
    for &i in subset {
        instance.check_index(i)?;
        if core::mem::replace(&mut seen[i], true) {
            return Err(Error::AlreadyMember(i));
        }
        let mut v = instance.row(i).to_vec();
        grown.rank_one_update(&mut v);
    }
    Ok(0.5 * (grown.log_det() - base.log_det()))
}

/// The item of largest singleton value `V({i}) = log(1 + ‖xᵢ‖²)` and that
/// value; ties go to the lowest index.
pub fn max_singleton(instance: &Instance) -> (usize, f64) {
    let mut best = (0, singleton_value(instance, 0));
    for i in 1..instance.n() {
        let v = singleton_value(instance, i);
        if strictly_better(v, best.1) {
            best = (i, v);
        }
    }
    best
}

pub(crate) fn singleton_value(instance: &Instance, i: usize) -> f64 {
    let norm_sq: f64 = instance.row(i).iter().map(|v| v * v).sum();
    libm::log1p(norm_sq)
}
