//! Per-state transition tables shared by the sampler and the exact oracle.

use crate::model::{derive_model_unchecked, DerivedModel, EnvLaw, Model, ModelError};
use crate::environment::QuenchedEnvironment;

#[derive(Debug, Clone)]
pub struct Dynamics {
    dim: usize,
    support: Vec<Vec<i64>>,
    /// `u_k − b` for every displacement.
    centered: Vec<Vec<f64>>,
    rows: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    law: EnvLaw,
    derived: DerivedModel,
}

impl Dynamics {
    /// Tables for a model that passes every validity condition.
    pub fn new(model: &Model) -> Result<Self, ModelError> {
        let derived = model.derive()?;
        Ok(Self::build(model, derived))
    }

    /// Tables for an arbitrary model, drift taken from
    /// [`derive_model_unchecked`]. Only for diagnostics on broken kernels.
    pub fn forced(model: &Model) -> Self {
        let derived = derive_model_unchecked(model.kernel(), model.law());
        Self::build(model, derived)
    }

    fn build(model: &Model, derived: DerivedModel) -> Self {
        let kernel = model.kernel();
        let support: Vec<Vec<i64>> = kernel.support().iter().map(<[i64]>::to_vec).collect();
        let centered = support
            .iter()
            .map(|u| u.iter().zip(&derived.b).map(|(&ui, bi)| ui as f64 - bi).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..kernel.num_states()).map(|s| kernel.row(s)).collect();
        let cumulative = rows.iter().map(|r| cumulative_row(r)).collect();
        Dynamics {
            dim: kernel.dim(),
            support,
            centered,
            rows,
            cumulative,
            law: model.law().clone(),
            derived,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn displacement(&self, k: usize) -> &[i64] {
        &self.support[k]
    }

    pub fn centered(&self, k: usize) -> &[f64] {
        &self.centered[k]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn law(&self) -> &EnvLaw {
        &self.law
    }

    pub fn derived(&self) -> &DerivedModel {
        &self.derived
    }

    pub fn drift(&self) -> &[f64] {
        &self.derived.b
    }

    pub fn environment(&self, seed: u64) -> QuenchedEnvironment {
        QuenchedEnvironment::new(seed, &self.law, self.dim)
    }

    /// Inverse-CDF draw of a displacement index from the row of `state`.
    #[inline]
    pub fn sample(&self, state: usize, draw: f64) -> usize {
        let cum = &self.cumulative[state];
        cum.iter().position(|&c| draw < c).unwrap_or(cum.len() - 1)
    }
}

/// Running sums of a row; entries from the last positive one onward are
/// set to +∞ so every draw in `[0, 1)` lands on a displacement of positive
/// probability.
fn cumulative_row(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cum: Vec<f64> = row
        .iter()
        .map(|p| {
            acc += p.max(0.0);
            acc
        })
        .collect();
    if let Some(last) = row.iter().rposition(|&p| p > 0.0) {
        for c in &mut cum[last..] {
            *c = f64::INFINITY;
        }
    }
    cum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn zero_tail_never_sampled() {
        let cum = cumulative_row(&[0.5, 0.5, 0.0]);
        assert_eq!(cum[0], 0.5);
        assert!(cum[1].is_infinite() && cum[2].is_infinite());
    }

    #[test]
    fn sample_respects_boundaries() {
        let d = Dynamics::new(&zoo::e1()).unwrap();
        // row A = (11/24, 1/12, 11/24)
        assert_eq!(d.sample(0, 0.0), 0);
        assert_eq!(d.sample(0, 11.0 / 24.0 - 1e-12), 0);
        assert_eq!(d.sample(0, 11.0 / 24.0), 1);
        assert_eq!(d.sample(0, 0.999_999_999), 2);
    }

    #[test]
    fn forced_tables_for_invalid_model() {
        let d = Dynamics::forced(&zoo::bad_drift());
        assert_eq!(d.drift(), &[0.0]);
        assert!(Dynamics::new(&zoo::bad_drift()).is_err());
    }
}
