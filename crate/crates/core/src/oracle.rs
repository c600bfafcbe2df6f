//! Exact laws of the walk at small horizons by forward propagation.
//!
//! Level `t + 1` is the push-forward of level `t`: every site `x` sends mass
//! `p(x)·row(u)` to `x + u`, where the row is `P₀ + c(·, ξ_t(x))` for the
//! quenched law and `P̄` for the annealed one. States are keyed by the
//! integer position `X_t`; the centred value `Y_t = X_t − t·b` is formed only
//! inside moment computations.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dynamics::Dynamics;
use crate::environment::QuenchedEnvironment;

pub const DEFAULT_HORIZON_CAP: u64 = 25;

/// Entries below this are dropped after each level; the dropped mass is
/// accumulated in [`LatticeDistribution::pruned_mass`].
pub const PRUNE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("horizon {requested} exceeds the cap of {cap}")]
    HorizonCap { requested: u64, cap: u64 },
    #[error("level {t} is outside the computed range 0..={last}")]
    OutOfRange { t: u64, last: u64 },
    #[error("start point {x0:?} does not have dimension {dim}")]
    StartDimension { x0: Vec<i64>, dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    pub t: u64,
    entries: BTreeMap<Vec<i64>, f64>,
    pruned_mass: f64,
}

impl LatticeDistribution {
    pub fn point(x: &[i64]) -> Self {
        LatticeDistribution { t: 0, entries: BTreeMap::from([(x.to_vec(), 1.0)]), pruned_mass: 0.0 }
    }

    pub fn get(&self, x: &[i64]) -> f64 {
        self.entries.get(x).copied().unwrap_or(0.0)
    }

    /// Entries in lexicographic order of the lattice point.
    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> {
        self.entries.iter().map(|(x, p)| (x.as_slice(), *p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Mass dropped by pruning up to and including this level.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    fn push_forward<'a, F>(&self, dynamics: &'a Dynamics, row_at: F) -> Self
    where
        F: Fn(&[i64]) -> &'a [f64],
    {
        let mut next: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (x, &p) in &self.entries {
            for (k, &q) in row_at(x).iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                let y: Vec<i64> = x.iter().zip(dynamics.displacement(k)).map(|(a, b)| a + b).collect();
                *next.entry(y).or_insert(0.0) += p * q;
            }
        }
        let mut pruned = self.pruned_mass;
        next.retain(|_, p| {
            if *p < PRUNE_THRESHOLD {
                pruned += *p;
                false
            } else {
                true
            }
        });
        LatticeDistribution { t: self.t + 1, entries: next, pruned_mass: pruned }
    }
}

fn check_cap(horizon: u64, cap: u64) -> Result<(), OracleError> {
    if horizon > cap {
        Err(OracleError::HorizonCap { requested: horizon, cap })
    } else {
        Ok(())
    }
}

/// Laws of `X_0, ..., X_T` under `P_ξ` started from `x0`.
pub fn quenched_distribution(
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    x0: &[i64],
    horizon: u64,
    cap: u64,
) -> Result<Vec<LatticeDistribution>, OracleError> {
    check_cap(horizon, cap)?;
    if x0.len() != dynamics.dim() {
        return Err(OracleError::StartDimension { x0: x0.to_vec(), dim: dynamics.dim() });
    }
    let mut levels = vec![LatticeDistribution::point(x0)];
    for t in 0..horizon {
        let next = levels[t as usize].push_forward(dynamics, |x| dynamics.row(env.state(t, x)));
        levels.push(next);
    }
    Ok(levels)
}

/// Laws of the `P̄`-walk from the origin: convolution powers of `P̄`.
pub fn annealed_distribution(
    dynamics: &Dynamics,
    horizon: u64,
    cap: u64,
) -> Result<Vec<LatticeDistribution>, OracleError> {
    check_cap(horizon, cap)?;
    let pbar = dynamics.derived().pbar.as_slice();
    let mut levels = vec![LatticeDistribution::point(&vec![0; dynamics.dim()])];
    for t in 0..horizon as usize {
        let next = levels[t].push_forward(dynamics, |_| pbar);
        levels.push(next);
    }
    Ok(levels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub t: u64,
    pub matrix: DMatrix<f64>,
}

/// `∑_x p(x) (x − t·b)(x − t·b)ᵀ`.
pub fn second_moment(dynamics: &Dynamics, dist: &LatticeDistribution) -> MomentMatrix {
    let n = dynamics.dim();
    let b = dynamics.drift();
    let t = dist.t as f64;
    let mut m = DMatrix::zeros(n, n);
    let mut y = vec![0.0; n];
    for (x, p) in dist.iter() {
        for i in 0..n {
            y[i] = x[i] as f64 - t * b[i];
        }
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += p * y[i] * y[j];
            }
        }
    }
    MomentMatrix { t: dist.t, matrix: m }
}

/// `H^ξ_t` for every level.
pub fn quenched_moment(dynamics: &Dynamics, dists: &[LatticeDistribution]) -> Vec<MomentMatrix> {
    dists.iter().map(|d| second_moment(dynamics, d)).collect()
}

/// `V_s = ∑_u (u − b)(u − b)ᵀ [P₀(u) + c(u, s)]` for each state.
fn state_covariances(dynamics: &Dynamics) -> Vec<DMatrix<f64>> {
    let n = dynamics.dim();
    (0..dynamics.num_states())
        .map(|s| {
            let mut v = DMatrix::zeros(n, n);
            for (k, &p) in dynamics.row(s).iter().enumerate() {
                let c = dynamics.centered(k);
                for i in 0..n {
                    for j in 0..n {
                        v[(i, j)] += c[i] * c[j] * p;
                    }
                }
            }
            v
        })
        .collect()
}

/// Right-hand side of the quenched increment formula at level `dist.t`:
/// `∑_y P_ξ{Y_t = y} ∑_u (u_i − b_i)(u_j − b_j)[P₀(u) + c(u, ξ_t(y))]`.
pub fn increment_formula(
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    dist: &LatticeDistribution,
) -> DMatrix<f64> {
    let v = state_covariances(dynamics);
    let n = dynamics.dim();
    let mut acc = DMatrix::zeros(n, n);
    for (x, p) in dist.iter() {
        acc += &v[env.state(dist.t, x)] * p;
    }
    acc
}

/// Largest entrywise gap between `H^ξ_{t+1} − H^ξ_t` computed from the
/// propagated laws and from [`increment_formula`].
pub fn increment_check(
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    dists: &[LatticeDistribution],
    t: u64,
) -> Result<f64, OracleError> {
    let last = dists.len() as u64 - 1;
    if t + 1 > last {
        return Err(OracleError::OutOfRange { t: t + 1, last });
    }
    let lhs = second_moment(dynamics, &dists[t as usize + 1]).matrix
        - second_moment(dynamics, &dists[t as usize]).matrix;
    let rhs = increment_formula(dynamics, env, &dists[t as usize]);
    Ok((lhs - rhs).amax())
}

/// `max_{t ≤ T} ‖H_t − t·η²‖_max` over the annealed laws.
pub fn annealed_moment_identity(
    dynamics: &Dynamics,
    horizon: u64,
    cap: u64,
) -> Result<f64, OracleError> {
    let levels = annealed_distribution(dynamics, horizon, cap)?;
    let eta2 = &dynamics.derived().eta2;
    Ok(levels
        .iter()
        .map(|d| (second_moment(dynamics, d).matrix - eta2 * d.t as f64).amax())
        .fold(0.0, f64::max))
}

/// `E[(Y_{t+1} − Y_t) Y_tᵀ]` at level `dist.t`, with the step out of each
/// site drawn from `row_at(x)`.
fn cross_moment<'a, F>(dynamics: &'a Dynamics, dist: &LatticeDistribution, row_at: F) -> DMatrix<f64>
where
    F: Fn(&[i64]) -> &'a [f64],
{
    let n = dynamics.dim();
    let b = dynamics.drift();
    let t = dist.t as f64;
    let mut m = DMatrix::zeros(n, n);
    for (x, p) in dist.iter() {
        let y: Vec<f64> = (0..n).map(|i| x[i] as f64 - t * b[i]).collect();
        for (k, &q) in row_at(x).iter().enumerate() {
            let u = dynamics.displacement(k);
            for i in 0..n {
                let next = x[i] as f64 + u[i] as f64 - (t + 1.0) * b[i];
                for j in 0..n {
                    m[(i, j)] += p * q * (next - y[i]) * y[j];
                }
            }
        }
    }
    m
}

/// Largest `|E_ξ[(Y^i_{t+1} − Y^i_t) Y^j_t]|` over the given quenched levels.
pub fn quenched_cross_term(
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    dists: &[LatticeDistribution],
) -> f64 {
    dists
        .iter()
        .map(|d| cross_moment(dynamics, d, |x| dynamics.row(env.state(d.t, x))).amax())
        .fold(0.0, f64::max)
}

/// Largest `|E[(Y^i_{t+1} − Y^i_t) Y^j_t]|` over the given annealed levels.
pub fn annealed_cross_term(dynamics: &Dynamics, dists: &[LatticeDistribution]) -> f64 {
    let pbar = dynamics.derived().pbar.as_slice();
    dists
        .iter()
        .map(|d| cross_moment(dynamics, d, |_| pbar).amax())
        .fold(0.0, f64::max)
}
