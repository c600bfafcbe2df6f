//! Simulation and verification of random walks in a dynamical i.i.d.
//! random environment.
//!
//! The walk moves on ℤⁿ with one-step law `P₀(u) + c(u, ξ_t(x))`, where the
//! environment `ξ_t(x)` is drawn independently for every time and site from
//! a law π on a finite alphabet. The crate validates kernels, samples
//! quenched and annealed ensembles, computes exact small-horizon laws by
//! forward propagation, and checks the martingale, quadratic-variation,
//! occupation and central-limit behaviour of the centred walk
//! `Y_t = X_t − t·b`.

pub mod cli;
pub mod dynamics;
pub mod environment;
pub mod hashing;
pub mod model;
pub mod oracle;
pub mod simulate;
pub mod stats;
pub mod zoo;

pub use dynamics::Dynamics;
pub use environment::QuenchedEnvironment;
pub use model::{DerivedModel, Model};
pub use simulate::{Ensemble, EnsembleSpec, Mode};
