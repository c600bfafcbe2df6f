//! Run configuration: defaults, optional TOML file, command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::DEFAULT_HORIZON_CAP;
use crate::simulate::Mode;
use crate::stats::{DEFAULT_KS_ALPHA, DEFAULT_OCCUPATION_SIGMAS, DEFAULT_QV_SIGMAS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("{0}")]
    Invalid(String),
}

/// Identifiers of the checks run by `verify`, in pipeline order.
pub const TEST_IDS: [&str; 8] =
    ["validate", "martingale", "increment", "annealed", "qv", "occupation", "ks", "covariance"];

/// Checks selected when `tests` is not given. The covariance check needs
/// `M` in the tens of thousands to resolve 3%, and is opt-in.
pub const DEFAULT_TESTS: [&str; 7] =
    ["validate", "martingale", "increment", "annealed", "qv", "occupation", "ks"];

/// Thresholds that `--tolerance KEY=VAL` may override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct Tolerances {
    pub martingale: f64,
    pub increment: f64,
    pub annealed: f64,
    pub qv_sigmas: f64,
    pub occupation_sigmas: f64,
    pub ks_alpha: f64,
    pub ks_directions: f64,
    pub covariance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            martingale: 1e-12,
            increment: 1e-12,
            annealed: 1e-10,
            qv_sigmas: DEFAULT_QV_SIGMAS,
            occupation_sigmas: DEFAULT_OCCUPATION_SIGMAS,
            ks_alpha: DEFAULT_KS_ALPHA,
            ks_directions: 5.0,
            covariance: 0.03,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ConfigError::Invalid(format!("tolerance {key} must be a non-negative number")));
        }
        let slot = match key {
            "martingale" => &mut self.martingale,
            "increment" => &mut self.increment,
            "annealed" => &mut self.annealed,
            "qv-sigmas" => &mut self.qv_sigmas,
            "occupation-sigmas" => &mut self.occupation_sigmas,
            "ks-alpha" => &mut self.ks_alpha,
            "ks-directions" => &mut self.ks_directions,
            "covariance" => &mut self.covariance,
            _ => return Err(ConfigError::Invalid(format!("unknown tolerance key `{key}`"))),
        };
        *slot = value;
        Ok(())
    }

    fn check(&self) -> Result<(), ConfigError> {
        if !(self.ks_alpha > 0.0 && self.ks_alpha < 1.0) {
            return Err(ConfigError::Invalid("ks-alpha must lie in (0, 1)".into()));
        }
        if self.ks_directions < 1.0 || self.ks_directions.fract() != 0.0 {
            return Err(ConfigError::Invalid("ks-directions must be a positive integer".into()));
        }
        Ok(())
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<PathBuf>,
    pub env_seed: Option<u64>,
    pub master_seed: Option<u64>,
    pub horizon: Option<u64>,
    pub walkers: Option<u64>,
    pub workers: Option<usize>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub tests: Option<Vec<String>>,
    pub cap: Option<u64>,
    #[serde(default)]
    pub tolerance: BTreeMap<String, f64>,
}

impl ConfigFile {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg: ConfigFile = toml::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.model = cfg.model.map(|p| if p.is_relative() { base.join(p) } else { p });
        cfg.out = cfg.out.map(|p| if p.is_relative() { base.join(p) } else { p });
        Ok(cfg)
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: PathBuf,
    pub env_seed: u64,
    pub master_seed: u64,
    pub horizon: u64,
    pub walkers: u64,
    pub workers: usize,
    pub mode: Mode,
    pub out: PathBuf,
    pub tests: Vec<String>,
    pub cap: u64,
    pub tolerance: Tolerances,
}

pub const DEFAULT_ENV_SEED: u64 = 1;
pub const DEFAULT_MASTER_SEED: u64 = 42;
pub const DEFAULT_HORIZON: u64 = 20_000;
pub const DEFAULT_WALKERS: u64 = 200;

/// Command-line values; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub model: Option<PathBuf>,
    pub env_seed: Option<u64>,
    pub master_seed: Option<u64>,
    pub horizon: Option<u64>,
    pub walkers: Option<u64>,
    pub workers: Option<usize>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub tests: Option<Vec<String>>,
    pub cap: Option<u64>,
    pub tolerance: Vec<String>,
}

impl RunConfig {
    /// Layers defaults, then the config file, then command-line flags.
    /// Without `default_horizon` an unset horizon falls back to the cap.
    pub fn resolve(
        file: Option<ConfigFile>,
        flags: Overrides,
        default_horizon: Option<u64>,
    ) -> Result<Self, ConfigError> {
        let file = file.unwrap_or_default();
        let model = flags
            .model
            .or(file.model)
            .ok_or_else(|| ConfigError::Invalid("no model file given (--model)".into()))?;
        let mut tolerance = Tolerances::default();
        for (k, v) in &file.tolerance {
            tolerance.set(k, *v)?;
        }
        for kv in &flags.tolerance {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("tolerance `{kv}` is not KEY=VAL")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("tolerance `{kv}` has a non-numeric value")))?;
            tolerance.set(k.trim(), v)?;
        }
        tolerance.check()?;
        let tests = flags
            .tests
            .or(file.tests)
            .unwrap_or_else(|| DEFAULT_TESTS.iter().map(|s| s.to_string()).collect());
        if let Some(bad) = tests.iter().find(|t| !TEST_IDS.contains(&t.as_str())) {
            return Err(ConfigError::Invalid(format!(
                "unknown test `{bad}` (known: {})",
                TEST_IDS.join(", ")
            )));
        }
        let cap = flags.cap.or(file.cap).unwrap_or(DEFAULT_HORIZON_CAP);
        let cfg = RunConfig {
            model,
            env_seed: flags.env_seed.or(file.env_seed).unwrap_or(DEFAULT_ENV_SEED),
            master_seed: flags.master_seed.or(file.master_seed).unwrap_or(DEFAULT_MASTER_SEED),
            horizon: flags.horizon.or(file.horizon).or(default_horizon).unwrap_or(cap),
            walkers: flags.walkers.or(file.walkers).unwrap_or(DEFAULT_WALKERS),
            workers: flags.workers.or(file.workers).unwrap_or(1),
            mode: flags.mode.or(file.mode).unwrap_or_default(),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            tests,
            cap,
            tolerance,
        };
        if cfg.walkers == 0 {
            return Err(ConfigError::Invalid("M (walkers) must be at least 1".into()));
        }
        if cfg.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn runs(&self, test: &str) -> bool {
        self.tests.iter().any(|t| t == test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(model: &str) -> Overrides {
        Overrides { model: Some(model.into()), ..Default::default() }
    }

    #[test]
    fn defaults_apply() {
        let c = RunConfig::resolve(None, flags("m.toml"), Some(DEFAULT_HORIZON)).unwrap();
        assert_eq!(c.env_seed, DEFAULT_ENV_SEED);
        assert_eq!(c.horizon, DEFAULT_HORIZON);
        assert_eq!(c.tests.len(), DEFAULT_TESTS.len());
        assert!(!c.runs("covariance"));
        assert_eq!(c.mode, Mode::Quenched);
        assert_eq!(c.cap, DEFAULT_HORIZON_CAP);
    }

    #[test]
    fn flags_override_file() {
        let file: ConfigFile =
            toml::from_str("env_seed = 9\nhorizon = 50\nmode = \"annealed\"\n[tolerance]\ncovariance = 0.1\n").unwrap();
        let mut f = flags("m.toml");
        f.horizon = Some(7);
        f.tolerance = vec!["covariance=0.2".into()];
        let c = RunConfig::resolve(Some(file), f, None).unwrap();
        assert_eq!(c.env_seed, 9);
        assert_eq!(c.horizon, 7);
        assert_eq!(c.mode, Mode::Annealed);
        assert_eq!(c.tolerance.covariance, 0.2);
    }

    #[test]
    fn horizon_falls_back_to_cap() {
        let mut f = flags("m.toml");
        f.cap = Some(12);
        assert_eq!(RunConfig::resolve(None, f, None).unwrap().horizon, 12);
    }

    #[test]
    fn unknown_config_key_rejected() {
        assert!(toml::from_str::<ConfigFile>("speed = 3\n").is_err());
    }

    #[test]
    fn bad_tolerances_rejected() {
        for t in ["nope=1", "covariance", "covariance=x", "ks-alpha=2", "martingale=-1"] {
            let mut f = flags("m.toml");
            f.tolerance = vec![t.into()];
            assert!(RunConfig::resolve(None, f, None).is_err(), "{t}");
        }
    }

    #[test]
    fn bad_counts_and_tests_rejected() {
        let mut f = flags("m.toml");
        f.walkers = Some(0);
        assert!(RunConfig::resolve(None, f, None).is_err());
        let mut f = flags("m.toml");
        f.workers = Some(0);
        assert!(RunConfig::resolve(None, f, None).is_err());
        let mut f = flags("m.toml");
        f.tests = Some(vec!["lemma9".into()]);
        assert!(RunConfig::resolve(None, f, None).is_err());
        assert!(RunConfig::resolve(None, Overrides::default(), None).is_err());
    }
}
