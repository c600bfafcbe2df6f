//! Sampling walkers in a fixed environment.
//!
//! Walker `w` of a run with master seed `m` owns the counter-based stream
//! `draw(r) = unit(hash(seed_w, r))` with `seed_w = hash(m, w)`; the
//! environment seed never enters a walker's stream. Results therefore do not
//! depend on how walkers are scheduled across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Dynamics;
use crate::environment::QuenchedEnvironment;
use crate::hashing::{derive_seed, domain, KeyHash};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("walker count must be at least 1")]
    NoWalkers,
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("start point {x0:?} does not have dimension {dim}")]
    StartDimension { x0: Vec<i64>, dim: usize },
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
}

/// Whether walkers share one environment or each draws a fresh one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Quenched,
    Annealed,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Quenched => "quenched",
            Mode::Annealed => "annealed",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quenched" => Ok(Mode::Quenched),
            "annealed" => Ok(Mode::Annealed),
            _ => Err(format!("unknown mode `{s}` (expected quenched or annealed)")),
        }
    }
}

pub fn walker_seed(master_seed: u64, walker: u64) -> u64 {
    derive_seed(master_seed, domain::WALKER_SEED, walker)
}

/// Uniform draws of one walker, indexed by step.
#[derive(Debug, Clone, Copy)]
pub struct WalkerStream {
    base: KeyHash,
}

impl WalkerStream {
    pub fn new(walker_seed: u64) -> Self {
        WalkerStream { base: KeyHash::new(walker_seed, domain::WALKER_DRAW) }
    }

    #[inline]
    pub fn draw(&self, step: u64) -> f64 {
        self.base.absorb(step).unit()
    }
}

/// One step from `x` at time `t`: inverse CDF of `P₀ + c(·, ξ_t(x))` at `draw`.
/// Returns the index of the displacement in the support.
#[inline]
pub fn step(dynamics: &Dynamics, env: &QuenchedEnvironment, t: u64, x: &[i64], draw: f64) -> usize {
    dynamics.sample(env.state(t, x), draw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub x0: Vec<i64>,
    /// Support index of the displacement taken at each step.
    pub steps: Vec<usize>,
    /// `X_0, ..., X_T`.
    pub positions: Vec<Vec<i64>>,
    /// `Y_r = X_r − r·b`.
    pub centered: Vec<Vec<f64>>,
}

impl WalkPath {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

pub fn run_walk(
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    x0: &[i64],
    horizon: u64,
    walker_seed: u64,
) -> WalkPath {
    let stream = WalkerStream::new(walker_seed);
    let b = dynamics.drift();
    let mut x = x0.to_vec();
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut positions = Vec::with_capacity(horizon as usize + 1);
    positions.push(x.clone());
    for t in 0..horizon {
        let k = step(dynamics, env, t, &x, stream.draw(t));
        for (xi, ui) in x.iter_mut().zip(dynamics.displacement(k)) {
            *xi += ui;
        }
        steps.push(k);
        positions.push(x.clone());
    }
    let centered = positions
        .iter()
        .enumerate()
        .map(|(r, p)| p.iter().zip(b).map(|(&xi, bi)| xi as f64 - r as f64 * bi).collect())
        .collect();
    WalkPath { x0: x0.to_vec(), steps, positions, centered }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub x0: Vec<i64>,
    pub horizon: u64,
    pub walkers: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub mode: Mode,
}

/// Terminal positions, quadratic variations and occupation counts of `M`
/// walkers. Per-walker data is stored flat in walker order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub env_seed: u64,
    pub master_seed: u64,
    pub mode: Mode,
    pub walkers: u64,
    pub horizon: u64,
    pub dim: usize,
    terminal_x: Vec<i64>,
    terminal_y: Vec<f64>,
    qv: Vec<f64>,
    /// Pooled number of times each displacement was taken.
    pub step_counts: Vec<u64>,
    /// Pooled `#{(r, w): ξ_r(X_r^w) = s, r < T}` per state.
    pub occupation: Vec<u64>,
}

impl Ensemble {
    pub fn terminal_x(&self, w: usize) -> &[i64] {
        &self.terminal_x[w * self.dim..(w + 1) * self.dim]
    }

    /// `Y_T` of walker `w`.
    pub fn terminal_y(&self, w: usize) -> &[f64] {
        &self.terminal_y[w * self.dim..(w + 1) * self.dim]
    }

    /// `[Y]_T` of walker `w`, row-major `n × n`.
    pub fn quadratic_variation(&self, w: usize) -> &[f64] {
        let n2 = self.dim * self.dim;
        &self.qv[w * n2..(w + 1) * n2]
    }

    /// `Y_T / √T` for every walker.
    pub fn scaled_terminal(&self) -> Vec<Vec<f64>> {
        let scale = 1.0 / (self.horizon as f64).sqrt();
        self.terminal_y.chunks(self.dim).map(|y| y.iter().map(|v| v * scale).collect()).collect()
    }

    pub fn terminal_samples(&self) -> Vec<Vec<f64>> {
        self.terminal_y.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}

struct WalkerSummary {
    x: Vec<i64>,
    counts: Vec<u32>,
    occupation: Vec<u32>,
}

fn run_walker(
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    x0: &[i64],
    horizon: u64,
    seed: u64,
) -> WalkerSummary {
    let stream = WalkerStream::new(seed);
    let mut x = x0.to_vec();
    let mut counts = vec![0u32; dynamics.support_len()];
    let mut occupation = vec![0u32; dynamics.num_states()];
    for t in 0..horizon {
        let s = env.state(t, &x);
        occupation[s] += 1;
        let k = dynamics.sample(s, stream.draw(t));
        counts[k] += 1;
        for (xi, ui) in x.iter_mut().zip(dynamics.displacement(k)) {
            *xi += ui;
        }
    }
    WalkerSummary { x, counts, occupation }
}

pub fn run_ensemble(
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    spec: &EnsembleSpec,
) -> Result<Ensemble, SimulateError> {
    use rayon::prelude::*;

    if spec.walkers == 0 {
        return Err(SimulateError::NoWalkers);
    }
    if spec.workers == 0 {
        return Err(SimulateError::NoWorkers);
    }
    let n = dynamics.dim();
    if spec.x0.len() != n {
        return Err(SimulateError::StartDimension { x0: spec.x0.clone(), dim: n });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| SimulateError::ThreadPool(e.to_string()))?;
    let summaries: Vec<WalkerSummary> = pool.install(|| {
        (0..spec.walkers)
            .into_par_iter()
            .map(|w| {
                let seed = walker_seed(spec.master_seed, w);
                match spec.mode {
                    Mode::Quenched => run_walker(dynamics, env, &spec.x0, spec.horizon, seed),
                    Mode::Annealed => {
                        run_walker(dynamics, &env.annealed_copy(w), &spec.x0, spec.horizon, seed)
                    }
                }
            })
            .collect()
    });

    let m = summaries.len();
    let b = dynamics.drift();
    let t = spec.horizon as f64;
    let mut terminal_x = Vec::with_capacity(m * n);
    let mut terminal_y = Vec::with_capacity(m * n);
    let mut qv = Vec::with_capacity(m * n * n);
    let mut step_counts = vec![0u64; dynamics.support_len()];
    let mut occupation = vec![0u64; dynamics.num_states()];
    for s in &summaries {
        terminal_x.extend_from_slice(&s.x);
        terminal_y.extend(s.x.iter().zip(b).map(|(&xi, bi)| xi as f64 - t * bi));
        for i in 0..n {
            for j in 0..n {
                let v: f64 = s
                    .counts
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c as f64 * dynamics.centered(k)[i] * dynamics.centered(k)[j])
                    .sum();
                qv.push(v);
            }
        }
        for (acc, &c) in step_counts.iter_mut().zip(&s.counts) {
            *acc += c as u64;
        }
        for (acc, &c) in occupation.iter_mut().zip(&s.occupation) {
            *acc += c as u64;
        }
    }
    Ok(Ensemble {
        env_seed: env.seed(),
        master_seed: spec.master_seed,
        mode: spec.mode,
        walkers: spec.walkers,
        horizon: spec.horizon,
        dim: n,
        terminal_x,
        terminal_y,
        qv,
        step_counts,
        occupation,
    })
}
