use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::output::{
    indexed_columns, json_report, matrix_columns, matrix_rows, real, status_line, write_file, Csv,
    Provenance, Seeds, ARTIFACT_VERSION, SCHEMA_VERSION,
};
use super::Failure;
use crate::dynamics::Dynamics;
use crate::environment::QuenchedEnvironment;
use crate::hashing::{derive_seed, domain};
use crate::model::ModelFile;
use crate::model::{ConditionId, ValidationReport, CONDITION_TOLERANCE};
use crate::oracle::{self, OracleError};
use crate::simulate::{run_ensemble, run_walk, walker_seed, Ensemble, EnsembleSpec, Mode, SimulateError};
use crate::stats::{self, StatsError, TestReport};

fn load_model(cfg: &RunConfig) -> Result<ModelFile, Failure> {
    ModelFile::load(&cfg.model).map_err(|e| Failure::input(format!("{}: {e}", cfg.model.display())))
}

fn provenance(command: &'static str, cfg: &RunConfig, file: &ModelFile, seeds: Seeds) -> Provenance {
    Provenance {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION,
        command,
        model_path: cfg.model.display().to_string(),
        model_hash: file.hash.clone(),
        seeds,
    }
}

fn both_seeds(cfg: &RunConfig) -> Seeds {
    Seeds { env_seed: Some(cfg.env_seed), master_seed: Some(cfg.master_seed) }
}

#[derive(Serialize)]
struct CheckView {
    id: ConditionId,
    passed: bool,
    max_violation: f64,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    displacement: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<String>,
}

fn check_views(file: &ModelFile, report: &ValidationReport) -> Vec<CheckView> {
    let labels = file.model.alphabet();
    report
        .checks
        .iter()
        .map(|c| {
            let off = c.offender.as_ref();
            CheckView {
                id: c.id,
                passed: c.passed,
                max_violation: c.max_violation,
                tolerance: CONDITION_TOLERANCE,
                displacement: off.and_then(|o| o.displacement.clone()),
                state: off.and_then(|o| o.state).map(|s| labels.label(s).to_string()),
            }
        })
        .collect()
}

fn describe_failure(v: &CheckView) -> String {
    let mut s = format!("{} violated by {:e}", v.id, v.max_violation);
    match (&v.displacement, &v.state) {
        (Some(u), Some(st)) => s += &format!(" at (u = {u:?}, s = {st})"),
        (Some(u), None) => s += &format!(" at u = {u:?}"),
        (None, Some(st)) => s += &format!(" at s = {st}"),
        (None, None) => {}
    }
    s
}

/// Checks that the model satisfies every kernel condition; returns the
/// dynamics, or a check failure naming the violated conditions.
fn valid_dynamics(file: &ModelFile) -> Result<Dynamics, Failure> {
    let report = file.model.validate();
    if !report.all_passed() {
        let views = check_views(file, &report);
        let msg: Vec<String> = views.iter().filter(|v| !v.passed).map(describe_failure).collect();
        return Err(Failure::check(format!("invalid model: {}", msg.join("; "))));
    }
    Dynamics::new(&file.model).map_err(|e| Failure::check(format!("invalid model: {e}")))
}

pub fn validate(cfg: &RunConfig) -> Result<(), Failure> {
    let file = load_model(cfg)?;
    let report = file.model.validate();
    let views = check_views(&file, &report);
    let header = provenance("validate", cfg, &file, Seeds { env_seed: None, master_seed: None });
    print!("{}", json_report(&header, &json!({ "passed": report.all_passed(), "checks": views })));
    if report.all_passed() {
        Ok(())
    } else {
        let msg: Vec<String> = views.iter().filter(|v| !v.passed).map(describe_failure).collect();
        Err(Failure::check(msg.join("; ")))
    }
}

fn simulate_error(e: SimulateError) -> Failure {
    match e {
        SimulateError::ThreadPool(_) => Failure::infrastructure(e.to_string()),
        _ => Failure::input(e.to_string()),
    }
}

fn stats_error(e: StatsError) -> Failure {
    Failure::input(format!("statistical precondition not met: {e}"))
}

fn write_error(cfg: &RunConfig, e: std::io::Error) -> Failure {
    Failure::infrastructure(format!("cannot write to {}: {e}", cfg.out.display()))
}

fn sample(cfg: &RunConfig, dynamics: &Dynamics, env: &QuenchedEnvironment) -> Result<Ensemble, Failure> {
    if cfg.horizon == 0 {
        return Err(Failure::input("T must be at least 1"));
    }
    let spec = EnsembleSpec {
        x0: vec![0; dynamics.dim()],
        horizon: cfg.horizon,
        walkers: cfg.walkers,
        master_seed: cfg.master_seed,
        workers: cfg.workers,
        mode: cfg.mode,
    };
    run_ensemble(dynamics, env, &spec).map_err(simulate_error)
}

pub fn simulate(cfg: &RunConfig) -> Result<(), Failure> {
    let file = load_model(cfg)?;
    let dynamics = valid_dynamics(&file)?;
    let env = dynamics.environment(cfg.env_seed);
    let ens = sample(cfg, &dynamics, &env)?;
    let n = dynamics.dim();

    let mut header = vec!["walker_id".to_string()];
    header.extend(indexed_columns("Y", n));
    let mut csv = Csv::new(&header);
    for w in 0..ens.walkers as usize {
        let mut row = vec![w.to_string()];
        row.extend(ens.terminal_y(w).iter().map(|&v| real(v)));
        csv.row(&row);
    }

    let m = ens.walkers as f64;
    let mut mean = vec![0.0; n];
    for w in 0..ens.walkers as usize {
        for (acc, v) in mean.iter_mut().zip(ens.terminal_y(w)) {
            *acc += v / m;
        }
    }
    let scaled = ens.scaled_terminal();
    let cov = if ens.walkers >= 2 {
        Some(stats::empirical_covariance(&scaled).map_err(stats_error)?)
    } else {
        None
    };
    let eta2 = &dynamics.derived().eta2;
    let pooled: u64 = ens.occupation.iter().sum();
    let summary = json!({
        "mode": cfg.mode,
        "horizon": cfg.horizon,
        "walkers": cfg.walkers,
        "mean_terminal": mean,
        "covariance_scaled": cov.as_ref().map(matrix_rows),
        "eta2": matrix_rows(eta2),
        "covariance_relative_error": cov.as_ref().map(|c| stats::relative_max_error(c, eta2)),
        "occupation_fractions": ens.occupation.iter().map(|&c| c as f64 / pooled as f64).collect::<Vec<_>>(),
    });
    let header = provenance("simulate", cfg, &file, both_seeds(cfg));
    write_file(&cfg.out, "samples.csv", &csv.into_string()).map_err(|e| write_error(cfg, e))?;
    write_file(&cfg.out, "summary.json", &json_report(&header, &summary)).map_err(|e| write_error(cfg, e))?;
    println!("wrote {}", cfg.out.join("samples.csv").display());
    println!("wrote {}", cfg.out.join("summary.json").display());
    Ok(())
}

fn oracle_error(e: OracleError) -> Failure {
    match e {
        OracleError::HorizonCap { .. } => Failure::check(e.to_string()),
        _ => Failure::input(e.to_string()),
    }
}

#[derive(Serialize)]
struct Skipped {
    id: String,
    reason: String,
}

pub fn verify(cfg: &RunConfig) -> Result<(), Failure> {
    let file = load_model(cfg)?;
    let tol = &cfg.tolerance;
    let mut reports: Vec<TestReport> = Vec::new();
    let mut skipped: Vec<Skipped> = Vec::new();

    let validation = file.model.validate();
    if cfg.runs("validate") {
        let worst = validation.checks.iter().map(|c| c.max_violation).fold(0.0, f64::max);
        let mut r = TestReport::new("validate", worst, CONDITION_TOLERANCE, 0)
            .with("checks", json!(check_views(&file, &validation)));
        // Per-condition verdicts decide, the worst violation is informative.
        r.passed = validation.all_passed();
        reports.push(r);
    }

    let rest: Vec<&String> = cfg.tests.iter().filter(|t| *t != "validate").collect();
    if validation.all_passed() {
        let dynamics = Dynamics::new(&file.model).map_err(|e| Failure::check(e.to_string()))?;
        let env = dynamics.environment(cfg.env_seed);
        run_pipeline(cfg, &dynamics, &env, &mut reports)?;
    } else {
        for t in rest {
            skipped.push(Skipped { id: t.clone(), reason: "model failed validation".into() });
        }
    }

    let passed = reports.iter().all(|r| r.passed) && skipped.is_empty();
    let header = provenance("verify", cfg, &file, both_seeds(cfg));
    let body = json!({
        "mode": cfg.mode,
        "horizon": cfg.horizon,
        "walkers": cfg.walkers,
        "cap": cfg.cap,
        "tolerance": tol,
        "tests": reports,
        "skipped": skipped,
        "passed": passed,
    });
    write_file(&cfg.out, "verify.json", &json_report(&header, &body)).map_err(|e| write_error(cfg, e))?;
    for r in &reports {
        println!("{}", status_line(&r.id, Some(r.passed), r.statistic, r.threshold));
    }
    for s in &skipped {
        println!("{} ({})", status_line(&s.id, None, 0.0, 0.0), s.reason);
    }
    println!("report: {}", cfg.out.join("verify.json").display());
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.id.as_str())
            .chain(skipped.iter().map(|s| s.id.as_str()))
            .collect();
        Err(Failure::check(format!("failed: {}", failed.join(", "))))
    }
}

/// Everything after validation, in pipeline order. The ensemble is sampled
/// once and shared by the statistical checks.
fn run_pipeline(
    cfg: &RunConfig,
    dynamics: &Dynamics,
    env: &QuenchedEnvironment,
    reports: &mut Vec<TestReport>,
) -> Result<(), Failure> {
    let tol = &cfg.tolerance;
    let origin = vec![0; dynamics.dim()];
    if cfg.horizon == 0 {
        return Err(Failure::input("T must be at least 1"));
    }

    if cfg.runs("martingale") {
        let paths = cfg.walkers.min(100);
        let mut worst = 0.0f64;
        for w in 0..paths {
            let seed = walker_seed(cfg.master_seed, w);
            let fresh;
            let path_env = match cfg.mode {
                Mode::Quenched => env,
                Mode::Annealed => {
                    fresh = env.annealed_copy(w);
                    &fresh
                }
            };
            let path = run_walk(dynamics, path_env, &origin, cfg.horizon, seed);
            worst = worst.max(stats::martingale_residual(dynamics, path_env, &path));
        }
        reports.push(
            TestReport::new("martingale", worst, tol.martingale, paths).with("horizon", cfg.horizon),
        );
    }

    let oracle_horizon = cfg.horizon.min(cfg.cap);
    if cfg.runs("increment") {
        let dists = oracle::quenched_distribution(dynamics, env, &origin, oracle_horizon, cfg.cap)
            .map_err(oracle_error)?;
        let mut worst = 0.0f64;
        for t in 0..oracle_horizon {
            worst = worst.max(oracle::increment_check(dynamics, env, &dists, t).map_err(oracle_error)?);
        }
        reports.push(
            TestReport::new("increment", worst, tol.increment, 0)
                .with("oracle_horizon", oracle_horizon)
                .with("cross_term", oracle::quenched_cross_term(dynamics, env, &dists)),
        );
    }

    if cfg.runs("annealed") {
        let worst =
            oracle::annealed_moment_identity(dynamics, oracle_horizon, cfg.cap).map_err(oracle_error)?;
        let dists = oracle::annealed_distribution(dynamics, oracle_horizon, cfg.cap).map_err(oracle_error)?;
        reports.push(
            TestReport::new("annealed", worst, tol.annealed, 0)
                .with("oracle_horizon", oracle_horizon)
                .with("cross_term", oracle::annealed_cross_term(dynamics, &dists)),
        );
    }

    let needs_ensemble = ["qv", "occupation", "ks", "covariance"].iter().any(|t| cfg.runs(t));
    if !needs_ensemble {
        return Ok(());
    }
    let ens = sample(cfg, dynamics, env)?;
    let eta2 = &dynamics.derived().eta2;

    if cfg.runs("qv") {
        reports.push(stats::qv_convergence(&ens, dynamics, tol.qv_sigmas).map_err(stats_error)?);
    }
    if cfg.runs("occupation") {
        reports.push(stats::occupation_lln(&ens, dynamics.law(), tol.occupation_sigmas).map_err(stats_error)?);
    }
    if cfg.runs("ks") {
        let dither_seed = derive_seed(cfg.master_seed, domain::DITHER, 0);
        let samples = stats::dithered_scaled_terminal(&ens, &stats::step_lattice(dynamics), dither_seed);
        let std = stats::standardize(&samples, eta2).map_err(stats_error)?;
        let direction_seed = derive_seed(cfg.master_seed, domain::KS_DIRECTIONS, 0);
        let r = stats::ks_projection_test(&std, tol.ks_directions as usize, tol.ks_alpha, direction_seed)
            .map_err(stats_error)?;
        reports.push(r.with("dither_seed", dither_seed));
    }
    if cfg.runs("covariance") {
        let cov = stats::empirical_covariance(&ens.scaled_terminal()).map_err(stats_error)?;
        let err = stats::relative_max_error(&cov, eta2);
        reports.push(
            TestReport::new("covariance", err, tol.covariance, ens.walkers)
                .with("covariance", json!(matrix_rows(&cov)))
                .with("eta2", json!(matrix_rows(eta2))),
        );
    }
    Ok(())
}

pub fn oracle(cfg: &RunConfig) -> Result<(), Failure> {
    let file = load_model(cfg)?;
    let dynamics = valid_dynamics(&file)?;
    let n = dynamics.dim();
    let origin = vec![0; n];
    let env = dynamics.environment(cfg.env_seed);
    let dists = match cfg.mode {
        Mode::Quenched => oracle::quenched_distribution(&dynamics, &env, &origin, cfg.horizon, cfg.cap),
        Mode::Annealed => oracle::annealed_distribution(&dynamics, cfg.horizon, cfg.cap),
    }
    .map_err(oracle_error)?;
    let eta2 = &dynamics.derived().eta2;

    let mut header = vec!["t".to_string()];
    header.extend(indexed_columns("x", n));
    header.push("prob".into());
    let mut csv = Csv::new(&header);
    for d in &dists {
        for (x, p) in d.iter() {
            let mut row = vec![d.t.to_string()];
            row.extend(x.iter().map(i64::to_string));
            row.push(real(p));
            csv.row(&row);
        }
    }

    // Quenched: gap of the increment formula from t to t + 1.
    // Annealed: gap of H_t from t·η².
    let moments = oracle::quenched_moment(&dynamics, &dists);
    let mut discrepancies: Vec<Option<f64>> = Vec::with_capacity(dists.len());
    for (t, m) in moments.iter().enumerate() {
        discrepancies.push(match cfg.mode {
            Mode::Quenched if t + 1 < dists.len() => {
                Some(oracle::increment_check(&dynamics, &env, &dists, t as u64).map_err(oracle_error)?)
            }
            Mode::Quenched => None,
            Mode::Annealed => Some((&m.matrix - eta2 * t as f64).amax()),
        });
    }
    let mut mheader = vec!["t".to_string()];
    mheader.extend(matrix_columns("H", n));
    mheader.push("discrepancy".into());
    let mut mcsv = Csv::new(&mheader);
    for (m, d) in moments.iter().zip(&discrepancies) {
        let mut row = vec![m.t.to_string()];
        row.extend(row_major(&m.matrix).into_iter().map(real));
        row.push(d.map(real).unwrap_or_default());
        mcsv.row(&row);
    }

    let cross = match cfg.mode {
        Mode::Quenched => oracle::quenched_cross_term(&dynamics, &env, &dists),
        Mode::Annealed => oracle::annealed_cross_term(&dynamics, &dists),
    };
    let last = dists.last().expect("level 0 always present");
    let body = json!({
        "mode": cfg.mode,
        "horizon": cfg.horizon,
        "cap": cfg.cap,
        "eta2": matrix_rows(eta2),
        "moments": moments.iter().zip(&discrepancies).map(|(m, d)| json!({
            "t": m.t,
            "H": matrix_rows(&m.matrix),
            "discrepancy": d,
        })).collect::<Vec<_>>(),
        "max_discrepancy": discrepancies.iter().flatten().copied().fold(0.0, f64::max),
        "max_cross_term": cross,
        "final_total_mass": last.total_mass(),
        "final_pruned_mass": last.pruned_mass(),
    });
    let seeds = match cfg.mode {
        Mode::Quenched => Seeds { env_seed: Some(cfg.env_seed), master_seed: None },
        Mode::Annealed => Seeds { env_seed: None, master_seed: None },
    };
    let header = provenance("oracle", cfg, &file, seeds);
    write_file(&cfg.out, "oracle.csv", &csv.into_string()).map_err(|e| write_error(cfg, e))?;
    write_file(&cfg.out, "moments.csv", &mcsv.into_string()).map_err(|e| write_error(cfg, e))?;
    write_file(&cfg.out, "oracle.json", &json_report(&header, &body)).map_err(|e| write_error(cfg, e))?;
    for name in ["oracle.csv", "moments.csv", "oracle.json"] {
        println!("wrote {}", cfg.out.join(name).display());
    }
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    matrix_rows(m).into_iter().flatten().collect()
}
