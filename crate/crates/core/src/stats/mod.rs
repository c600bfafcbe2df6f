//! Statistical checks on simulated ensembles.
//!
//! Every check returns a [`TestReport`] whose `passed` flag is exactly
//! `statistic <= threshold`.

pub mod ks;
pub mod lattice;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::dynamics::Dynamics;
use crate::environment::QuenchedEnvironment;
use crate::model::EnvLaw;
use crate::simulate::{Ensemble, WalkPath};

pub use ks::{kolmogorov_cdf, kolmogorov_quantile, ks_statistic, normal_cdf};
pub use lattice::{dithered_scaled_terminal, lattice_basis, step_lattice};

/// Symmetry tolerance on covariance matrices handed to [`standardize`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVE_EIGENVALUE_TOLERANCE` are rejected.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;
/// Eigenvalues below this are treated as zero and their directions dropped.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-12;

pub const DEFAULT_KS_ALPHA: f64 = 0.01;
pub const DEFAULT_KS_DIRECTIONS: usize = 5;
pub const DEFAULT_QV_SIGMAS: f64 = 4.0;
pub const DEFAULT_OCCUPATION_SIGMAS: f64 = 4.0;
pub const MIN_KS_SAMPLE: usize = 100;
pub const MIN_QV_HORIZON: u64 = 100;
pub const MIN_OCCUPATION_COUNT: u64 = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("samples have inconsistent dimensions")]
    RaggedSamples,
    #[error("matrix is not symmetric (largest gap {0:e})")]
    Asymmetric(f64),
    #[error("matrix has negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("covariance has no positive eigenvalue; nothing to standardize")]
    Degenerate,
    #[error("horizon {got} is below the minimum of {need}")]
    HorizonTooShort { need: u64, got: u64 },
    #[error("pooled count {got} is below the minimum of {need}")]
    CountTooSmall { need: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub id: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub sample_size: u64,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl TestReport {
    pub fn new(id: impl Into<String>, statistic: f64, threshold: f64, sample_size: u64) -> Self {
        TestReport {
            id: id.into(),
            statistic,
            threshold,
            passed: statistic <= threshold,
            sample_size,
            details: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }
}

fn check_dims(samples: &[Vec<f64>]) -> Result<usize, StatsError> {
    let n = samples.first().map_or(0, Vec::len);
    if samples.iter().any(|s| s.len() != n) {
        return Err(StatsError::RaggedSamples);
    }
    Ok(n)
}

/// Mean-centred second-moment matrix with denominator `M` (not `M − 1`).
pub fn empirical_covariance(samples: &[Vec<f64>]) -> Result<DMatrix<f64>, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFewSamples { need: 2, got: samples.len() });
    }
    let n = check_dims(samples)?;
    let m = samples.len() as f64;
    let mut mean = vec![0.0; n];
    for s in samples {
        for (acc, v) in mean.iter_mut().zip(s) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let mut cov = DMatrix::zeros(n, n);
    for s in samples {
        for i in 0..n {
            let di = s[i] - mean[i];
            for j in 0..n {
                cov[(i, j)] += di * (s[j] - mean[j]);
            }
        }
    }
    Ok(cov / m)
}

/// `max |a − b| / max |b|`.
pub fn relative_max_error(estimate: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    (estimate - target).amax() / target.amax()
}

/// Whitening map built from an eigendecomposition `QΛQᵀ` of a covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    /// Rows map an `n`-vector to the whitened coordinates.
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Number of directions dropped as degenerate.
    pub dropped: usize,
}

impl Whitening {
    /// Full rank: the symmetric inverse square root `QΛ^{-1/2}Qᵀ`.
    /// Rank `r < n`: the `r × n` map `Λ₊^{-1/2}Q₊ᵀ` onto the positive
    /// eigenspace, eigenvectors signed so their largest entry is positive.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self, StatsError> {
        let asym = (cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE {
            return Err(StatsError::Asymmetric(asym));
        }
        let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        if let Some(&neg) = eigenvalues.iter().find(|&&l| l < -NEGATIVE_EIGENVALUE_TOLERANCE) {
            return Err(StatsError::NegativeEigenvalue(neg));
        }
        let keep: Vec<usize> =
            order.iter().copied().filter(|&i| eig.eigenvalues[i] >= DEGENERATE_EIGENVALUE).collect();
        if keep.is_empty() {
            return Err(StatsError::Degenerate);
        }
        let n = cov.nrows();
        let mut rows = DMatrix::zeros(keep.len(), n);
        for (r, &i) in keep.iter().enumerate() {
            let mut q = eig.eigenvectors.column(i).into_owned();
            let lead = q.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if lead < 0.0 {
                q = -q;
            }
            let scale = 1.0 / eig.eigenvalues[i].sqrt();
            for j in 0..n {
                rows[(r, j)] = q[j] * scale;
            }
        }
        let matrix = if keep.len() == n {
            // QᵀΛ^{-1/2}-rows stacked give Λ^{-1/2}Qᵀ; premultiply by Q.
            let mut q = DMatrix::zeros(n, n);
            for (r, &i) in keep.iter().enumerate() {
                let lam = eig.eigenvalues[i].sqrt();
                for j in 0..n {
                    q[(j, r)] = rows[(r, j)] * lam;
                }
            }
            q * rows
        } else {
            rows
        };
        Ok(Whitening { matrix, eigenvalues, dropped: n - keep.len() })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|r| (0..self.matrix.ncols()).map(|j| self.matrix[(r, j)] * v[j]).sum())
            .collect()
    }
}

/// Samples mapped to nominally standard normal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSample {
    pub vectors: Vec<Vec<f64>>,
    pub dropped: usize,
}

impl StandardizedSample {
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn standardize(samples: &[Vec<f64>], cov: &DMatrix<f64>) -> Result<StandardizedSample, StatsError> {
    let n = check_dims(samples)?;
    if !samples.is_empty() && n != cov.nrows() {
        return Err(StatsError::RaggedSamples);
    }
    let w = Whitening::new(cov)?;
    Ok(StandardizedSample {
        vectors: samples.iter().map(|s| w.apply(s)).collect(),
        dropped: w.dropped,
    })
}

/// Projects the sample on `directions` seeded uniform unit vectors and runs
/// a one-sample KS test against `N(0, 1)` on each, Bonferroni-corrected.
pub fn ks_projection_test(
    std: &StandardizedSample,
    directions: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestReport, StatsError> {
    if std.len() < MIN_KS_SAMPLE {
        return Err(StatsError::TooFewSamples { need: MIN_KS_SAMPLE, got: std.len() });
    }
    let n = std.dim();
    if n == 0 {
        return Err(StatsError::Degenerate);
    }
    let directions = directions.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = std.len();
    let critical = kolmogorov_quantile(1.0 - alpha / directions as f64) / (m as f64).sqrt();

    let mut stats = Vec::with_capacity(directions);
    let mut dirs = Vec::with_capacity(directions);
    for _ in 0..directions {
        let dir = loop {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                break v.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
            }
        };
        let mut proj: Vec<f64> =
            std.vectors.iter().map(|v| v.iter().zip(&dir).map(|(a, b)| a * b).sum()).collect();
        proj.sort_by(f64::total_cmp);
        stats.push(ks_statistic(&proj, normal_cdf));
        dirs.push(dir);
    }
    let worst = stats.iter().copied().fold(0.0, f64::max);
    Ok(TestReport::new("ks", worst, critical, m as u64)
        .with("alpha", alpha)
        .with("directions", json!(dirs))
        .with("statistics", json!(stats))
        .with("direction_seed", seed)
        .with("dropped_dimensions", std.dropped))
}

/// Picks the entry whose deviation is largest relative to its band, so that
/// `passed` on the resulting report is equivalent to every entry passing.
fn worst_entry(devs: &[f64], bands: &[f64]) -> usize {
    let ratio = |i: usize| {
        if bands[i] > 0.0 {
            devs[i] / bands[i]
        } else if devs[i] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    (0..devs.len()).fold(0, |best, i| if ratio(i) > ratio(best) { i } else { best })
}

/// Mean over walkers of `[Y]_T / T` against η².
///
/// The band for entry `(i, j)` is `sigmas · σ_ij / √(M·T)`, where `σ_ij` is
/// the standard deviation of a single increment product `ΔY^i ΔY^j`
/// estimated from the pooled step counts.
pub fn qv_convergence(
    ensemble: &Ensemble,
    dynamics: &Dynamics,
    sigmas: f64,
) -> Result<TestReport, StatsError> {
    if ensemble.horizon < MIN_QV_HORIZON {
        return Err(StatsError::HorizonTooShort { need: MIN_QV_HORIZON, got: ensemble.horizon });
    }
    let n = ensemble.dim;
    let m = ensemble.walkers as f64;
    let t = ensemble.horizon as f64;
    let pooled = m * t;
    let eta2 = &dynamics.derived().eta2;

    let mut mean = vec![0.0; n * n];
    for w in 0..ensemble.walkers as usize {
        for (acc, v) in mean.iter_mut().zip(ensemble.quadratic_variation(w)) {
            *acc += v / t;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);

    let mut devs = Vec::with_capacity(n * n);
    let mut bands = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (mut first, mut second) = (0.0, 0.0);
            for (k, &count) in ensemble.step_counts.iter().enumerate() {
                let c = dynamics.centered(k);
                let a = c[i] * c[j];
                first += count as f64 * a;
                second += count as f64 * a * a;
            }
            let var = (second / pooled - (first / pooled).powi(2)).max(0.0);
            devs.push((mean[i * n + j] - eta2[(i, j)]).abs());
            bands.push(sigmas * var.sqrt() / pooled.sqrt());
        }
    }
    let w = worst_entry(&devs, &bands);
    Ok(TestReport::new("qv", devs[w], bands[w], pooled as u64)
        .with("mean_qv_over_t", json!(mean))
        .with("eta2", json!(eta2.iter().copied().collect::<Vec<_>>()))
        .with("deviations", json!(devs))
        .with("bands", json!(bands))
        .with("sigmas", sigmas)
        .with("env_seed", ensemble.env_seed)
        .with("master_seed", ensemble.master_seed))
}

/// Pooled fraction of visited `(r, X_r)` pairs in each environment state
/// against π, with binomial bands `sigmas · √(π(1−π)/(M·T))`.
pub fn occupation_lln(
    ensemble: &Ensemble,
    law: &EnvLaw,
    sigmas: f64,
) -> Result<TestReport, StatsError> {
    let pooled: u64 = ensemble.occupation.iter().sum();
    if pooled < MIN_OCCUPATION_COUNT {
        return Err(StatsError::CountTooSmall { need: MIN_OCCUPATION_COUNT, got: pooled });
    }
    let total = pooled as f64;
    let fractions: Vec<f64> = ensemble.occupation.iter().map(|&c| c as f64 / total).collect();
    let devs: Vec<f64> = fractions.iter().zip(law.probs()).map(|(f, p)| (f - p).abs()).collect();
    let bands: Vec<f64> =
        law.probs().iter().map(|p| sigmas * (p * (1.0 - p) / total).sqrt()).collect();
    let w = worst_entry(&devs, &bands);
    Ok(TestReport::new("occupation", devs[w], bands[w], pooled)
        .with("fractions", json!(fractions))
        .with("pi", json!(law.probs()))
        .with("bands", json!(bands))
        .with("worst_state", w)
        .with("sigmas", sigmas)
        .with("mode", ensemble.mode.to_string())
        .with("env_seed", ensemble.env_seed)
        .with("master_seed", ensemble.master_seed))
}

/// `max_r ‖∑_u (u − b)·(P₀(u) + c(u, ξ_r(X_r)))‖_∞` along a path.
pub fn martingale_residual(dynamics: &Dynamics, env: &QuenchedEnvironment, path: &WalkPath) -> f64 {
    let n = dynamics.dim();
    path.positions[..path.horizon()]
        .iter()
        .enumerate()
        .map(|(r, x)| {
            let row = dynamics.row(env.state(r as u64, x));
            (0..n)
                .map(|i| {
                    row.iter()
                        .enumerate()
                        .map(|(k, p)| dynamics.centered(k)[i] * p)
                        .sum::<f64>()
                        .abs()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{run_ensemble, run_walk, EnsembleSpec, Mode};
    use crate::zoo;
    use proptest::prelude::*;
    use rand::Rng;

    fn normal_samples(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect()
    }

    #[test]
    fn covariance_edge_cases() {
        let zeros = vec![vec![0.0, 0.0]; 5];
        assert_eq!(empirical_covariance(&zeros).unwrap().amax(), 0.0);
        let v = [0.5, -2.0];
        let pm = vec![v.to_vec(), v.iter().map(|x| -x).collect()];
        let c = empirical_covariance(&pm).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((c[(i, j)] - v[i] * v[j]).abs() < 1e-15);
            }
        }
        assert_eq!(
            empirical_covariance(&[vec![1.0]]).unwrap_err(),
            StatsError::TooFewSamples { need: 2, got: 1 }
        );
    }

    #[test]
    fn identity_whitening() {
        let s = normal_samples(10, 3, 1);
        let out = standardize(&s, &DMatrix::identity(3, 3)).unwrap();
        for (a, b) in s.iter().zip(&out.vectors) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_whitening() {
        let out = standardize(&[vec![1.0], vec![-2.0]], &DMatrix::from_element(1, 1, 2.0 / 3.0)).unwrap();
        assert!((out.vectors[0][0] - 1.5f64.sqrt()).abs() < 1e-12);
        assert!((out.vectors[1][0] + 2.0 * 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_direction_dropped() {
        let cov = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        let out = standardize(&[vec![1.0, 7.0]], &cov).unwrap();
        assert_eq!(out.dropped, 1);
        assert_eq!(out.dim(), 1);
        assert!((out.vectors[0][0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bad_covariances_rejected() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(standardize(&[], &asym), Err(StatsError::Asymmetric(_))));
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(matches!(standardize(&[], &neg), Err(StatsError::NegativeEigenvalue(_))));
        assert_eq!(standardize(&[], &DMatrix::zeros(2, 2)).unwrap_err(), StatsError::Degenerate);
    }

    #[test]
    fn whitened_covariance_is_identity() {
        // Samples with covariance A Aᵀ, whitened by A Aᵀ.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.8, 0.6]);
        let cov = &a * a.transpose();
        let raw: Vec<Vec<f64>> = normal_samples(200_000, 2, 5)
            .iter()
            .map(|z| vec![z[0], 0.8 * z[0] + 0.6 * z[1]])
            .collect();
        let out = standardize(&raw, &cov).unwrap();
        let c = empirical_covariance(&out.vectors).unwrap();
        // 5σ for a variance estimate from 2·10⁵ samples is ≈ 0.016.
        assert!((c - DMatrix::identity(2, 2)).amax() < 0.016);
    }

    #[test]
    fn ks_accepts_normal_samples() {
        // Bonferroni level 0.01 per run; allow one rejection in twenty.
        let mut rejections = 0;
        for seed in 0..20 {
            let s = StandardizedSample { vectors: normal_samples(100_000, 2, 1000 + seed), dropped: 0 };
            let r = ks_projection_test(&s, 5, 0.01, seed).unwrap();
            if !r.passed {
                rejections += 1;
            }
        }
        assert!(rejections <= 1, "{rejections} rejections");
    }

    #[test]
    fn ks_calibration() {
        let mut rejections = 0;
        for seed in 0..500 {
            let s = StandardizedSample { vectors: normal_samples(1000, 2, seed), dropped: 0 };
            if !ks_projection_test(&s, 5, 0.01, seed).unwrap().passed {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / 500.0;
        assert!((0.001..=0.05).contains(&rate), "rejection rate {rate}");
    }

    #[test]
    fn ks_rejects_constant_sample() {
        let s = StandardizedSample { vectors: vec![vec![0.0]; 1000], dropped: 0 };
        let r = ks_projection_test(&s, 5, 0.01, 0).unwrap();
        assert!(!r.passed);
        assert!((r.statistic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_needs_enough_samples() {
        let s = StandardizedSample { vectors: vec![vec![0.0]; 99], dropped: 0 };
        assert!(matches!(ks_projection_test(&s, 5, 0.01, 0), Err(StatsError::TooFewSamples { .. })));
    }

    #[test]
    fn residual_is_zero_for_valid_models() {
        for model in [zoo::e1(), zoo::e3(), zoo::e4()] {
            let d = Dynamics::new(&model).unwrap();
            let env = d.environment(3);
            let path = run_walk(&d, &env, &vec![0; d.dim()], 500, 1);
            assert!(martingale_residual(&d, &env, &path) <= 1e-12);
        }
    }

    #[test]
    fn residual_of_broken_drift() {
        let d = Dynamics::forced(&zoo::bad_drift());
        let env = d.environment(3);
        let path = run_walk(&d, &env, &[0], 200, 1);
        let r = martingale_residual(&d, &env, &path);
        assert!((r - 0.25).abs() < 1e-15, "{r}");
    }

    #[test]
    fn e4_row_mean_is_drift() {
        // (−1)(1/24) + 0·(7/12) + 1·(3/8) = 1/3.
        let m = zoo::e4();
        let row = m.row_kernel("B").unwrap();
        let mean = -row[0] + row[2];
        assert!((mean - 1.0 / 3.0).abs() < 1e-15);
    }

    fn ensemble(model: crate::model::Model, m: u64, t: u64, mode: Mode) -> (Dynamics, Ensemble) {
        let d = Dynamics::new(&model).unwrap();
        let env = d.environment(1);
        let spec = EnsembleSpec { x0: vec![0; d.dim()], horizon: t, walkers: m, master_seed: 2, workers: 1, mode };
        let e = run_ensemble(&d, &env, &spec).unwrap();
        (d, e)
    }

    #[test]
    fn qv_of_free_walk_single_path() {
        let (d, e) = ensemble(zoo::e3(), 1, 10_000, Mode::Quenched);
        let qv = e.quadratic_variation(0);
        assert!((qv[0] / 1e4 - 0.5).abs() <= 0.05);
        assert!((qv[3] / 1e4 - 0.5).abs() <= 0.05);
        assert_eq!(qv[1], 0.0);
        assert!(qv_convergence(&e, &d, 4.0).is_ok());
    }

    #[test]
    fn qv_of_point_mass_is_exact() {
        use crate::model::{DisplacementSupport, EnvAlphabet, Kernel, Model};
        let support = DisplacementSupport::new(1, vec![vec![0]]).unwrap();
        let kernel = Kernel::new(support, vec![1.0], vec![vec![0.0]]).unwrap();
        let model = Model::new(
            EnvAlphabet::new(vec!["S".into()]).unwrap(),
            EnvLaw::new(vec![1.0]).unwrap(),
            kernel,
        )
        .unwrap();
        let (d, e) = ensemble(model, 10, 100, Mode::Quenched);
        let r = qv_convergence(&e, &d, 4.0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.passed);
        assert!(matches!(
            occupation_lln(&e, d.law(), 4.0),
            Err(StatsError::CountTooSmall { need: 10_000, got: 1000 })
        ));
    }

    #[test]
    fn qv_needs_long_horizon() {
        let (d, e) = ensemble(zoo::e1(), 10, 99, Mode::Quenched);
        assert!(matches!(qv_convergence(&e, &d, 4.0), Err(StatsError::HorizonTooShort { .. })));
    }

    #[test]
    fn single_state_occupation_is_exact() {
        let (_, e) = ensemble(zoo::e3(), 100, 100, Mode::Quenched);
        // E3 has two states; collapse the counts to test the |𝕊| = 1 law.
        let mut one = e.clone();
        one.occupation = vec![e.occupation.iter().sum()];
        let r = occupation_lln(&one, &EnvLaw::new(vec![1.0]).unwrap(), 4.0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn annealed_occupation_band() {
        let (d, e) = ensemble(zoo::e1(), 1000, 1000, Mode::Annealed);
        let r = occupation_lln(&e, d.law(), 4.0).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.threshold - 0.002).abs() < 1e-15);
    }

    #[test]
    fn worst_entry_handles_zero_bands() {
        assert_eq!(worst_entry(&[0.0, 0.1], &[0.0, 1.0]), 1);
        assert_eq!(worst_entry(&[0.1, 0.1], &[0.0, 1.0]), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn whitening_inverts_covariance(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.1f64..2.0) {
            // cov = L Lᵀ for a random lower-triangular L; W cov Wᵀ = I.
            let l = DMatrix::from_row_slice(2, 2, &[c, 0.0, a, b.abs() + 0.1]);
            let cov = &l * l.transpose();
            let w = Whitening::new(&cov).unwrap();
            let id = &w.matrix * &cov * w.matrix.transpose();
            prop_assert!((id - DMatrix::<f64>::identity(2, 2)).amax() < 1e-9);
            prop_assert!((&w.matrix - w.matrix.transpose()).amax() < 1e-9);
        }
    }
}
