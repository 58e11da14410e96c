//! Experiment specification: config file plus `ACL_` environment overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use acl_core::params::{config_from_map, parse_key_values, render_config, NumericsConfig, SemiclassicalParams, CONFIG_KEYS};
use acl_core::Error;
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Outer,
    Inner,
    Full,
    LzTable,
    Convergence,
}

/// Keys read by the driver on top of the physical and numerical ones.
pub const DRIVER_KEYS: [&str; 2] = ["sweep", "eta"];

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub params: SemiclassicalParams,
    pub num: NumericsConfig,
    /// Comma-separated `sweep=` ε values.
    pub sweep: Option<Vec<f64>>,
    /// Comma-separated `eta=` values for the scattering table.
    pub etas: Option<Vec<f64>>,
    pub output_dir: PathBuf,
}

/// Failure with the process exit status it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub reason: String,
}

impl Failure {
    pub fn config(reason: impl Into<String>) -> Self {
        Self { code: 2, reason: reason.into() }
    }

    pub fn tolerance(reason: impl Into<String>) -> Self {
        Self { code: 1, reason: reason.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::GammaOutOfRange(_)
            | Error::Config(_)
            | Error::MissingKey(_)
            | Error::UnknownKey(_)
            | Error::Trajectory(_) => 2,
            Error::Resolution(_) => 3,
            _ => 1,
        };
        Self { code, reason: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: 1, reason: format!("io: {e}") }
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, Failure> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::config(format!("config: {key}: not a number: {s:?}"))))
        .collect()
}

/// Applies `ACL_<KEY>` overrides from `env` to the parsed file.
pub fn apply_env(map: &mut BTreeMap<String, String>, env: impl IntoIterator<Item = (String, String)>) {
    let env: BTreeMap<String, String> = env.into_iter().collect();
    for key in CONFIG_KEYS.iter().chain(DRIVER_KEYS.iter()) {
        if let Some(v) = env.get(&format!("ACL_{}", key.to_uppercase())) {
            map.insert(key.to_string(), v.clone());
        }
    }
}

impl ExperimentSpec {
    pub fn load(
        config: &Path,
        mode: Mode,
        output_dir: PathBuf,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(config)
            .map_err(|e| Failure::config(format!("config: cannot read {}: {e}", config.display())))?;
        let mut map = parse_key_values(&text)?;
        apply_env(&mut map, env);
        Self::from_map(map, mode, output_dir)
    }

    pub fn from_map(mut map: BTreeMap<String, String>, mode: Mode, output_dir: PathBuf) -> Result<Self, Failure> {
        let sweep = map.remove("sweep").map(|v| list("sweep", &v)).transpose()?;
        let etas = map.remove("eta").map(|v| list("eta", &v)).transpose()?;
        let (params, num) = config_from_map(&map)?;
        if mode == Mode::Convergence && sweep.as_ref().is_none_or(|s| s.len() < 3) {
            return Err(Failure::config("config: convergence needs sweep with at least 3 values"));
        }
        if let Some(s) = &sweep {
            for &e in s {
                params.with_epsilon(e)?;
            }
        }
        Ok(Self { mode, params, num, sweep, etas, output_dir })
    }

    /// One-line echo of the full configuration for output comments.
    pub fn echo(&self) -> String {
        let mut parts: Vec<String> = render_config(&self.params, &self.num).lines().map(str::to_string).collect();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        if let Some(s) = &self.sweep {
            parts.push(format!("sweep={}", join(s)));
        }
        if let Some(e) = &self.etas {
            parts.push(format!("eta={}", join(e)));
        }
        parts.join(" ")
    }
}
