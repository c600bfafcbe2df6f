//! One realisation of the dynamical environment ξ.
//!
//! Nothing is stored: `ξ_t(x)` is recomputed on every query by hashing
//! `(seed, t, x)` (see [`crate::hashing`]) to a uniform in `[0, 1)` and
//! inverting the CDF of π over the alphabet in its declared order.

use std::collections::HashSet;

use thiserror::Error;

use crate::hashing::{derive_seed, domain, KeyHash};
use crate::model::EnvLaw;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvironmentError {
    #[error("duplicate key (t = {t}, x = {x:?})")]
    DuplicateKey { t: u64, x: Vec<i64> },
    #[error("key x = {x:?} does not have dimension {dim}")]
    WrongDimension { x: Vec<i64>, dim: usize },
}

#[derive(Debug, Clone)]
pub struct QuenchedEnvironment {
    seed: u64,
    dim: usize,
    cumulative: Vec<f64>,
    base: KeyHash,
}

impl QuenchedEnvironment {
    pub fn new(seed: u64, law: &EnvLaw, dim: usize) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = law
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Uniforms are < 1, so the last state with positive mass absorbs
        // whatever rounding left in the running sum.
        if let Some(last) = law.probs().iter().rposition(|&p| p > 0.0) {
            for c in &mut cumulative[last..] {
                *c = f64::INFINITY;
            }
        }
        QuenchedEnvironment { seed, dim, cumulative, base: KeyHash::new(seed, domain::ENVIRONMENT) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_states(&self) -> usize {
        self.cumulative.len()
    }

    /// The same law under a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        QuenchedEnvironment { seed, base: KeyHash::new(seed, domain::ENVIRONMENT), ..self.clone() }
    }

    /// The independent environment handed to walker `walker` in annealed mode.
    pub fn annealed_copy(&self, walker: u64) -> Self {
        self.with_seed(derive_seed(self.seed, domain::ANNEALED_ENVIRONMENT, walker))
    }

    /// Index of `ξ_t(x)` in the alphabet.
    #[inline]
    pub fn state(&self, t: u64, x: &[i64]) -> usize {
        debug_assert_eq!(x.len(), self.dim);
        let h = x.iter().fold(self.base.absorb(t), |h, &xi| h.absorb_signed(xi));
        let u = h.unit();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1)
    }

    /// Counts of each state over a set of distinct keys.
    pub fn histogram<'a, I>(&self, keys: I) -> Result<Vec<u64>, EnvironmentError>
    where
        I: IntoIterator<Item = (u64, &'a [i64])>,
    {
        let mut counts = vec![0u64; self.num_states()];
        let mut seen = HashSet::new();
        for (t, x) in keys {
            if x.len() != self.dim {
                return Err(EnvironmentError::WrongDimension { x: x.to_vec(), dim: self.dim });
            }
            if !seen.insert((t, x.to_vec())) {
                return Err(EnvironmentError::DuplicateKey { t, x: x.to_vec() });
            }
            counts[self.state(t, x)] += 1;
        }
        Ok(counts)
    }
}

/// Pearson chi-square statistic of `counts` against the law π.
pub fn chi_square(counts: &[u64], law: &EnvLaw) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(law.probs())
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| {
            let e = total as f64 * p;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}
