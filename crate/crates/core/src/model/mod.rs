//! Transition kernels of the walk and the quantities derived from them.
//!
//! A model consists of a finite environment alphabet 𝕊, a law π on it, and a
//! kernel `P₀(u) + c(u, s)` over a finite set of displacements. From a kernel
//! that satisfies all five validity conditions we derive the free drift
//! `b⁰`, the environment drift `b^c`, the total drift `b`, the averaged
//! kernel `P̄` and the one-step covariance matrix η².

mod file;

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

pub use file::{parse_model, ModelFile};

/// Pass/fail threshold for the exact algebraic conditions.
pub const CONDITION_TOLERANCE: f64 = 1e-10;

/// Tolerance on the normalisation of probability vectors read from input.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("environment alphabet is empty")]
    EmptyAlphabet,
    #[error("duplicate state label `{0}`")]
    DuplicateState(String),
    #[error("unknown state label `{0}`")]
    UnknownState(String),
    #[error("invalid environment law: {0}")]
    InvalidLaw(String),
    #[error("invalid displacement support: {0}")]
    InvalidSupport(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("kernel fails condition(s): {}", join_ids(.0))]
    InvalidKernel(Vec<ConditionId>),
    #[error("derived-model invariant violated: {0}")]
    Invariant(String),
}

fn join_ids(ids: &[ConditionId]) -> String {
    ids.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(", ")
}

/// Ordered list of distinct environment state labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvAlphabet {
    states: Vec<String>,
}

impl EnvAlphabet {
    pub fn new(states: Vec<String>) -> Result<Self, ModelError> {
        if states.is_empty() {
            return Err(ModelError::EmptyAlphabet);
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(ModelError::DuplicateState(s.clone()));
            }
        }
        Ok(EnvAlphabet { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.states[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.states
    }

    pub fn index_of(&self, label: &str) -> Result<usize, ModelError> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| ModelError::UnknownState(label.to_string()))
    }
}

/// The law π of a single environment value, indexed like the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvLaw {
    probs: Vec<f64>,
}

impl EnvLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::InvalidLaw("no entries".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(ModelError::InvalidLaw(format!("entry {i} = {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ModelError::InvalidLaw(format!("entries sum to {total}, not 1")));
        }
        Ok(EnvLaw { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }
}

/// Finite set of displacements in ℤⁿ, stored in strictly increasing
/// lexicographic order. That order is the canonical sampling order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplacementSupport {
    dim: usize,
    displacements: Vec<Vec<i64>>,
}

impl DisplacementSupport {
    pub fn new(dim: usize, displacements: Vec<Vec<i64>>) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::InvalidSupport("dimension must be at least 1".into()));
        }
        if displacements.is_empty() {
            return Err(ModelError::InvalidSupport("support is empty".into()));
        }
        if let Some(u) = displacements.iter().find(|u| u.len() != dim) {
            return Err(ModelError::InvalidSupport(format!(
                "displacement {u:?} does not have dimension {dim}"
            )));
        }
        for pair in displacements.windows(2) {
            if pair[0] >= pair[1] {
                return Err(ModelError::InvalidSupport(format!(
                    "displacements {:?} and {:?} are not in strictly increasing lexicographic order",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(DisplacementSupport { dim, displacements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    pub fn get(&self, k: usize) -> &[i64] {
        &self.displacements[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.displacements.iter().map(Vec::as_slice)
    }

    /// Largest absolute coordinate over the support.
    pub fn range(&self) -> i64 {
        self.displacements
            .iter()
            .flat_map(|u| u.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Free-walk law `P₀` and environment perturbation `c(u, s)`.
///
/// `c` is stored column-wise: `c[s][k]` is `c(u_k, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    support: DisplacementSupport,
    p0: Vec<f64>,
    c: Vec<Vec<f64>>,
}

impl Kernel {
    /// Builds a kernel after structural checks only; the probabilistic
    /// conditions are reported by [`validate_kernel`].
    pub fn new(
        support: DisplacementSupport,
        p0: Vec<f64>,
        c: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let k = support.len();
        if p0.len() != k {
            return Err(ModelError::DimensionMismatch(format!(
                "p0 has {} entries, support has {k}",
                p0.len()
            )));
        }
        if c.is_empty() {
            return Err(ModelError::DimensionMismatch("c has no state columns".into()));
        }
        for (s, col) in c.iter().enumerate() {
            if col.len() != k {
                return Err(ModelError::DimensionMismatch(format!(
                    "c column {s} has {} entries, support has {k}",
                    col.len()
                )));
            }
        }
        if p0.iter().chain(c.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(ModelError::DimensionMismatch("non-finite kernel entry".into()));
        }
        Ok(Kernel { support, p0, c })
    }

    pub fn support(&self) -> &DisplacementSupport {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn num_states(&self) -> usize {
        self.c.len()
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn c(&self, state: usize) -> &[f64] {
        &self.c[state]
    }

    /// `P₀(u) + c(u, s)` over the support.
    pub fn row(&self, state: usize) -> Vec<f64> {
        self.p0.iter().zip(&self.c[state]).map(|(p, c)| p + c).collect()
    }

    /// `∑_u u·c(u, s)`.
    pub fn env_drift(&self, state: usize) -> Vec<f64> {
        weighted_mean(&self.support, &self.c[state])
    }
}

fn weighted_mean(support: &DisplacementSupport, weights: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; support.dim()];
    for (u, w) in support.iter().zip(weights) {
        for (mi, ui) in m.iter_mut().zip(u) {
            *mi += *ui as f64 * w;
        }
    }
    m
}

/// Alphabet, law and kernel read together from a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    alphabet: EnvAlphabet,
    law: EnvLaw,
    kernel: Kernel,
}

impl Model {
    pub fn new(alphabet: EnvAlphabet, law: EnvLaw, kernel: Kernel) -> Result<Self, ModelError> {
        if law.len() != alphabet.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "pi has {} entries, alphabet has {} states",
                law.len(),
                alphabet.len()
            )));
        }
        if kernel.num_states() != alphabet.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "c has {} state columns, alphabet has {} states",
                kernel.num_states(),
                alphabet.len()
            )));
        }
        Ok(Model { alphabet, law, kernel })
    }

    pub fn alphabet(&self) -> &EnvAlphabet {
        &self.alphabet
    }

    pub fn law(&self) -> &EnvLaw {
        &self.law
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_kernel(&self.kernel, &self.law).expect("shapes checked at construction")
    }

    pub fn derive(&self) -> Result<DerivedModel, ModelError> {
        derive_model(&self.kernel, &self.law)
    }

    /// Transition probabilities out of a site in state `label`.
    pub fn row_kernel(&self, label: &str) -> Result<Vec<f64>, ModelError> {
        Ok(self.kernel.row(self.alphabet.index_of(label)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionId {
    ProbBounds,
    CZeroSum,
    PiMeanZero,
    ConstantDrift,
    P0Normalized,
}

impl ConditionId {
    pub const ALL: [ConditionId; 5] = [
        ConditionId::ProbBounds,
        ConditionId::CZeroSum,
        ConditionId::PiMeanZero,
        ConditionId::ConstantDrift,
        ConditionId::P0Normalized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::ProbBounds => "prob-bounds",
            ConditionId::CZeroSum => "c-zero-sum",
            ConditionId::PiMeanZero => "pi-mean-zero",
            ConditionId::ConstantDrift => "constant-drift",
            ConditionId::P0Normalized => "p0-normalized",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the worst violation of a condition occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub displacement: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub id: ConditionId,
    pub passed: bool,
    pub max_violation: f64,
    pub offender: Option<Offender>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: ConditionId) -> &ConditionCheck {
        self.checks
            .iter()
            .find(|c| c.id == id)
            .expect("report holds every condition")
    }

    pub fn failed(&self) -> Vec<ConditionId> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

/// Tracks the largest violation seen so far and where it happened.
struct Worst {
    value: f64,
    offender: Option<Offender>,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, offender: None }
    }

    fn offer(&mut self, value: f64, displacement: Option<&[i64]>, state: Option<usize>) {
        if value > self.value {
            self.value = value;
            self.offender = Some(Offender {
                displacement: displacement.map(<[i64]>::to_vec),
                state,
            });
        }
    }

    fn finish(self, id: ConditionId) -> ConditionCheck {
        ConditionCheck {
            id,
            passed: self.value <= CONDITION_TOLERANCE,
            max_violation: self.value,
            offender: if self.value > CONDITION_TOLERANCE { self.offender } else { None },
        }
    }
}

/// Evaluates the five validity conditions of a kernel under the law π.
///
/// A shape mismatch between the kernel's state columns and the law is a
/// structural error, not a failed check.
pub fn validate_kernel(kernel: &Kernel, law: &EnvLaw) -> Result<ValidationReport, ModelError> {
    if kernel.num_states() != law.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "c has {} state columns, pi has {} entries",
            kernel.num_states(),
            law.len()
        )));
    }
    let support = kernel.support();

    let mut bounds = Worst::new();
    for s in 0..kernel.num_states() {
        for (k, u) in support.iter().enumerate() {
            let p = kernel.p0[k] + kernel.c[s][k];
            bounds.offer((-p).max(p - 1.0), Some(u), Some(s));
        }
    }

    let mut zero_sum = Worst::new();
    for s in 0..kernel.num_states() {
        let total: f64 = kernel.c[s].iter().sum();
        zero_sum.offer(total.abs(), None, Some(s));
    }

    let mut mean_zero = Worst::new();
    for (k, u) in support.iter().enumerate() {
        let avg: f64 = (0..kernel.num_states()).map(|s| kernel.c[s][k] * law.prob(s)).sum();
        mean_zero.offer(avg.abs(), Some(u), None);
    }

    let mut drift = Worst::new();
    let first = kernel.env_drift(0);
    for s in 1..kernel.num_states() {
        let gap = kernel
            .env_drift(s)
            .iter()
            .zip(&first)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        drift.offer(gap, None, Some(s));
    }

    let mut normalized = Worst::new();
    normalized.offer((kernel.p0.iter().sum::<f64>() - 1.0).abs(), None, None);
    for (k, u) in support.iter().enumerate() {
        normalized.offer(-kernel.p0[k], Some(u), None);
    }

    Ok(ValidationReport {
        checks: vec![
            bounds.finish(ConditionId::ProbBounds),
            zero_sum.finish(ConditionId::CZeroSum),
            mean_zero.finish(ConditionId::PiMeanZero),
            drift.finish(ConditionId::ConstantDrift),
            normalized.finish(ConditionId::P0Normalized),
        ],
    })
}

/// Drifts, averaged kernel and covariance matrix of a valid model.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedModel {
    /// Mean of `P₀`.
    pub b0: Vec<f64>,
    /// Environment drift `∑_u u·c(u, s)`, identical for every state.
    pub bc: Vec<f64>,
    /// Total drift `b⁰ + b^c`.
    pub b: Vec<f64>,
    /// `P̄(u) = P₀(u) + ∑_s π(s) c(u, s)`.
    pub pbar: Vec<f64>,
    /// `(η²)_ij = ∑_u (u_i − b_i)(u_j − b_j) P̄(u)`, symmetrised.
    pub eta2: DMatrix<f64>,
}

impl DerivedModel {
    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

/// Derives `b⁰, b^c, b, P̄, η²` from a kernel that passes every condition.
///
/// `b^c` is read off the first state; the constant-drift check guarantees
/// the other states agree. The centred one-step condition and the collapse
/// `b^c = 0`, `P̄ = P₀` (forced once π-mean-zero and constant drift both
/// hold) are re-checked here and reported as invariant violations.
pub fn derive_model(kernel: &Kernel, law: &EnvLaw) -> Result<DerivedModel, ModelError> {
    let report = validate_kernel(kernel, law)?;
    if !report.all_passed() {
        return Err(ModelError::InvalidKernel(report.failed()));
    }
    let bc = kernel.env_drift(0);
    let derived = assemble(kernel, law, bc);

    for s in 0..kernel.num_states() {
        let residual = centered_residual(kernel, &derived.b, s);
        if residual > CONDITION_TOLERANCE {
            return Err(ModelError::Invariant(format!(
                "one-step mean minus b is {residual:e} in state {s}"
            )));
        }
    }
    let bc_norm = derived.bc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let collapse = derived
        .pbar
        .iter()
        .zip(kernel.p0())
        .fold(bc_norm, |m, (a, b)| m.max((a - b).abs()));
    if collapse > CONDITION_TOLERANCE {
        return Err(ModelError::Invariant(format!(
            "b^c and P̄ − P₀ should vanish, largest entry is {collapse:e}"
        )));
    }
    let asym = (&derived.eta2 - derived.eta2.transpose()).amax();
    if asym > NORMALIZATION_TOLERANCE {
        return Err(ModelError::Invariant(format!("eta2 asymmetric by {asym:e}")));
    }
    Ok(derived)
}

/// Derivation without validation, for pushing broken kernels through the
/// diagnostics. `b^c` is the π-average of the per-state drifts here, which
/// coincides with [`derive_model`] whenever the kernel is valid.
pub fn derive_model_unchecked(kernel: &Kernel, law: &EnvLaw) -> DerivedModel {
    let mut bc = vec![0.0; kernel.dim()];
    for s in 0..kernel.num_states() {
        for (acc, d) in bc.iter_mut().zip(kernel.env_drift(s)) {
            *acc += law.prob(s) * d;
        }
    }
    assemble(kernel, law, bc)
}

fn assemble(kernel: &Kernel, law: &EnvLaw, bc: Vec<f64>) -> DerivedModel {
    let support = kernel.support();
    let n = support.dim();
    let b0 = weighted_mean(support, kernel.p0());
    let b: Vec<f64> = b0.iter().zip(&bc).map(|(x, y)| x + y).collect();
    let pbar: Vec<f64> = (0..support.len())
        .map(|k| {
            kernel.p0[k]
                + (0..kernel.num_states())
                    .map(|s| law.prob(s) * kernel.c[s][k])
                    .sum::<f64>()
        })
        .collect();
    let mut eta2 = DMatrix::zeros(n, n);
    for (u, p) in support.iter().zip(&pbar) {
        for i in 0..n {
            let di = u[i] as f64 - b[i];
            for j in 0..n {
                eta2[(i, j)] += di * (u[j] as f64 - b[j]) * p;
            }
        }
    }
    let eta2 = (&eta2 + eta2.transpose()) * 0.5;
    DerivedModel { b0, bc, b, pbar, eta2 }
}

/// `max_i |∑_u (u_i − b_i)(P₀(u) + c(u, s))|`.
pub fn centered_residual(kernel: &Kernel, b: &[f64], state: usize) -> f64 {
    let row = kernel.row(state);
    let mut acc = vec![0.0; b.len()];
    for (u, p) in kernel.support().iter().zip(&row) {
        for i in 0..b.len() {
            acc[i] += (u[i] as f64 - b[i]) * p;
        }
    }
    acc.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn e1_passes_every_condition() {
        let m = zoo::e1();
        let r = m.validate();
        assert_eq!(r.checks.len(), 5);
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn report_lists_each_condition_once() {
        let r = zoo::e1().validate();
        for id in ConditionId::ALL {
            assert_eq!(r.checks.iter().filter(|c| c.id == id).count(), 1);
        }
    }

    #[test]
    fn bounds_violation_located() {
        let m = zoo::bad_bounds();
        let r = m.validate();
        assert_eq!(r.failed(), vec![ConditionId::ProbBounds]);
        let chk = r.check(ConditionId::ProbBounds);
        assert!(close(chk.max_violation, 0.25, 1e-15));
        let off = chk.offender.as_ref().unwrap();
        assert_eq!(off.displacement.as_deref(), Some(&[1i64][..]));
        assert_eq!(off.state, Some(m.alphabet().index_of("A").unwrap()));
    }

    #[test]
    fn drift_violation_detected() {
        let m = zoo::bad_drift();
        let r = m.validate();
        assert_eq!(r.failed(), vec![ConditionId::ConstantDrift]);
        // drift(A) = 1/4, drift(B) = -1/4
        assert!(close(r.check(ConditionId::ConstantDrift).max_violation, 0.5, 1e-15));
        assert!(close(m.kernel().env_drift(0)[0], 0.25, 1e-15));
        assert!(close(m.kernel().env_drift(1)[0], -0.25, 1e-15));
    }

    #[test]
    fn mean_zero_violation_detected() {
        let m = zoo::bad_pi_mean();
        assert_eq!(m.validate().failed(), vec![ConditionId::PiMeanZero]);
    }

    #[test]
    fn zero_sum_violation_detected() {
        let support = DisplacementSupport::new(1, vec![vec![-1], vec![0], vec![1]]).unwrap();
        let k = Kernel::new(
            support,
            vec![0.25, 0.5, 0.25],
            vec![vec![0.0, 0.1, 0.0], vec![0.0, -0.1, 0.0]],
        )
        .unwrap();
        let law = EnvLaw::new(vec![0.5, 0.5]).unwrap();
        let r = validate_kernel(&k, &law).unwrap();
        assert_eq!(r.failed(), vec![ConditionId::CZeroSum]);
    }

    #[test]
    fn state_count_mismatch_is_structural() {
        let m = zoo::e1();
        let law = EnvLaw::new(vec![1.0]).unwrap();
        assert!(matches!(
            validate_kernel(m.kernel(), &law),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn derive_refuses_invalid_kernel() {
        let m = zoo::bad_drift();
        assert_eq!(
            m.derive().unwrap_err(),
            ModelError::InvalidKernel(vec![ConditionId::ConstantDrift])
        );
    }

    #[test]
    fn e1_derived_values() {
        let d = zoo::e1().derive().unwrap();
        assert!(close(d.b[0], 0.0, 1e-12));
        for p in &d.pbar {
            assert!(close(*p, 1.0 / 3.0, 1e-12));
        }
        assert!(close(d.eta2[(0, 0)], 2.0 / 3.0, 1e-12));
    }

    #[test]
    fn e3_derived_values() {
        let d = zoo::e3().derive().unwrap();
        assert_eq!(d.b, vec![0.0, 0.0]);
        assert!(close(d.eta2[(0, 0)], 0.5, 1e-12));
        assert!(close(d.eta2[(1, 1)], 0.5, 1e-12));
        assert!(close(d.eta2[(0, 1)], 0.0, 1e-12));
    }

    #[test]
    fn e4_derived_values() {
        let d = zoo::e4().derive().unwrap();
        assert!(close(d.b0[0], 1.0 / 3.0, 1e-12));
        assert!(close(d.b[0], 1.0 / 3.0, 1e-12));
        assert!(close(d.eta2[(0, 0)], 5.0 / 9.0, 1e-12));
    }

    #[test]
    fn rows_of_e1() {
        let m = zoo::e1();
        let a = m.row_kernel("A").unwrap();
        let b = m.row_kernel("B").unwrap();
        let expect_a = [11.0 / 24.0, 1.0 / 12.0, 11.0 / 24.0];
        let expect_b = [5.0 / 24.0, 7.0 / 12.0, 5.0 / 24.0];
        for k in 0..3 {
            assert!(close(a[k], expect_a[k], 1e-15));
            assert!(close(b[k], expect_b[k], 1e-15));
        }
        assert!(matches!(m.row_kernel("C"), Err(ModelError::UnknownState(_))));
    }

    #[test]
    fn rows_of_e3_are_uniform() {
        let m = zoo::e3();
        for label in m.alphabet().labels() {
            assert_eq!(m.row_kernel(label).unwrap(), vec![0.25; 4]);
        }
    }

    #[test]
    fn forced_derivation_of_drift_fixture() {
        let m = zoo::bad_drift();
        let d = derive_model_unchecked(m.kernel(), m.law());
        assert!(close(d.bc[0], 0.0, 1e-15));
        assert!(close(centered_residual(m.kernel(), &d.b, 0), 0.25, 1e-15));
    }

    #[test]
    fn alphabet_rejects_duplicates() {
        assert_eq!(
            EnvAlphabet::new(vec!["A".into(), "A".into()]),
            Err(ModelError::DuplicateState("A".into()))
        );
        assert_eq!(EnvAlphabet::new(vec![]), Err(ModelError::EmptyAlphabet));
    }

    #[test]
    fn law_must_sum_to_one() {
        assert!(EnvLaw::new(vec![0.5, 0.4]).is_err());
        assert!(EnvLaw::new(vec![1.5, -0.5]).is_err());
        assert!(EnvLaw::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn support_must_be_sorted_and_distinct() {
        assert!(DisplacementSupport::new(1, vec![vec![1], vec![0]]).is_err());
        assert!(DisplacementSupport::new(1, vec![vec![0], vec![0]]).is_err());
        assert!(DisplacementSupport::new(2, vec![vec![0]]).is_err());
        assert!(DisplacementSupport::new(1, vec![]).is_err());
    }
}
