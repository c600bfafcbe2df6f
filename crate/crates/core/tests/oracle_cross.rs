//! Exact laws against sampling, and quenched laws against the annealed one.

use std::collections::BTreeMap;

use rwre::oracle::{self, DEFAULT_HORIZON_CAP};
use rwre::simulate::{run_ensemble, EnsembleSpec, Mode};
use rwre::{zoo, Dynamics};

fn histogram(d: &Dynamics, env_seed: u64, walkers: u64, horizon: u64, mode: Mode) -> BTreeMap<Vec<i64>, u64> {
    let env = d.environment(env_seed);
    let spec = EnsembleSpec { x0: vec![0; d.dim()], horizon, walkers, master_seed: 42, workers: 2, mode };
    let ens = run_ensemble(d, &env, &spec).unwrap();
    let mut h = BTreeMap::new();
    for w in 0..walkers as usize {
        *h.entry(ens.terminal_x(w).to_vec()).or_default() += 1;
    }
    h
}

fn max_z(hist: &BTreeMap<Vec<i64>, u64>, law: &oracle::LatticeDistribution, n: u64, floor: f64) -> f64 {
    let mut worst = 0.0f64;
    for (x, p) in law.iter() {
        if p < floor {
            continue;
        }
        let f = hist.get(x).copied().unwrap_or(0) as f64 / n as f64;
        worst = worst.max((f - p).abs() / (p * (1.0 - p) / n as f64).sqrt());
    }
    // Sampled sites the exact law does not reach at all.
    assert!(hist.keys().all(|x| law.get(x) > 0.0), "walker left the support of the exact law");
    worst
}

#[test]
fn quenched_histogram_matches_exact_law_in_two_dimensions() {
    let d = Dynamics::new(&zoo::e3()).unwrap();
    let env = d.environment(4);
    let n = 200_000;
    let h = histogram(&d, 4, n, 8, Mode::Quenched);
    let law = &oracle::quenched_distribution(&d, &env, &[0, 0], 8, DEFAULT_HORIZON_CAP).unwrap()[8];
    let z = max_z(&h, law, n, 1e-3);
    assert!(z <= 4.5, "max |z| = {z}");
}

#[test]
fn quenched_histogram_matches_exact_law_with_drift() {
    let d = Dynamics::new(&zoo::e4()).unwrap();
    let env = d.environment(9);
    let n = 200_000;
    let h = histogram(&d, 9, n, 12, Mode::Quenched);
    let law = &oracle::quenched_distribution(&d, &env, &[0], 12, DEFAULT_HORIZON_CAP).unwrap()[12];
    let z = max_z(&h, law, n, 1e-3);
    assert!(z <= 4.5, "max |z| = {z}");
}

#[test]
fn annealed_sampling_matches_convolution_law() {
    // Each annealed walker sees a fresh environment, so its position has the
    // law of the P̄-walk exactly.
    let d = Dynamics::new(&zoo::e1()).unwrap();
    let n = 200_000;
    let h = histogram(&d, 1, n, 10, Mode::Annealed);
    let law = &oracle::annealed_distribution(&d, 10, DEFAULT_HORIZON_CAP).unwrap()[10];
    let z = max_z(&h, law, n, 1e-3);
    assert!(z <= 4.5, "max |z| = {z}");
}

#[test]
fn average_of_quenched_laws_is_the_annealed_law() {
    let d = Dynamics::new(&zoo::e4()).unwrap();
    let horizon = 6;
    let seeds = 500u64;
    let annealed = &oracle::annealed_distribution(&d, horizon, DEFAULT_HORIZON_CAP).unwrap()[horizon as usize];
    let mut sum: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut sum_sq: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for s in 0..seeds {
        let env = d.environment(1000 + s);
        let q = oracle::quenched_distribution(&d, &env, &[0], horizon, DEFAULT_HORIZON_CAP).unwrap();
        for (x, p) in q[horizon as usize].iter() {
            *sum.entry(x.to_vec()).or_default() += p;
            *sum_sq.entry(x.to_vec()).or_default() += p * p;
        }
    }
    let k = seeds as f64;
    for (x, p) in annealed.iter() {
        let mean = sum.get(x).copied().unwrap_or(0.0) / k;
        let var = (sum_sq.get(x).copied().unwrap_or(0.0) / k - mean * mean).max(0.0);
        let band = 4.0 * (var / k).sqrt() + 1e-12;
        assert!((mean - p).abs() <= band, "x = {x:?}: mean {mean} vs annealed {p}, band {band}");
    }
}

#[test]
fn dp_laws_are_normalised_and_centred() {
    for model in [zoo::e1(), zoo::e3(), zoo::e4()] {
        let d = Dynamics::new(&model).unwrap();
        let env = d.environment(2);
        let origin = vec![0; d.dim()];
        let levels = oracle::quenched_distribution(&d, &env, &origin, 20, DEFAULT_HORIZON_CAP).unwrap();
        for l in &levels {
            assert!((l.total_mass() - 1.0).abs() < 1e-12);
            for i in 0..d.dim() {
                let t = l.t as f64;
                let mean: f64 = l.iter().map(|(x, p)| p * (x[i] as f64 - t * d.drift()[i])).sum();
                assert!(mean.abs() < 1e-12, "quenched mean of Y at t = {}: {mean}", l.t);
            }
        }
    }
}
