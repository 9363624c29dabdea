//! Run configurations, JSON config files and run manifests.
//!
//! A config file holds the fields of one command's config; every field is
//! optional and flags override it. A manifest written by a previous run is
//! also accepted as a config file, which reproduces that run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use tfdw_core::{DistanceKind, MinimizeConfig, Schedule};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> Result<Self, CliError> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config).map_err(|e| CliError::Run(e.to_string()))?,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Run(e.to_string()))?;
        fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
        Ok(())
    }
}

/// The config object in `path`, unwrapping a manifest of the same command.
pub fn load_config_value(path: &Path, command: &str) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid JSON in {}: {e}", path.display())))?;
    match serde_json::from_value::<Manifest>(value.clone()) {
        Ok(m) if m.command == command => Ok(m.config),
        Ok(m) => Err(CliError::Usage(format!(
            "{} is a manifest for `{}`, not `{command}`",
            path.display(),
            m.command
        ))),
        Err(_) => Ok(value),
    }
}

/// Parse `value` into `C`, or return the default when there is no file.
pub fn from_file<C: DeserializeOwned + Default>(value: Option<&Value>) -> Result<C, CliError> {
    match value {
        None => Ok(C::default()),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::Usage(format!("invalid config: {e}"))),
    }
}

fn default_out(command: &str) -> PathBuf {
    PathBuf::from("runs").join(command)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub kind: DistanceKind,
    pub seed: u64,
    pub ball_radius: u64,
    pub lp_instances: usize,
    pub hls_instances: usize,
    pub truncation_instances: usize,
    /// Added to the ball volume formula; nonzero only to exercise the failure path.
    pub ball_fault: i64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            kind: DistanceKind::Euclidean,
            seed: 20_240_601,
            ball_radius: 30,
            lp_instances: 100_000,
            hls_instances: 100_000,
            truncation_instances: 10_000,
            ball_fault: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsiDecayConfig {
    pub kind: DistanceKind,
    pub n_max: u64,
    pub mass: f64,
}

impl Default for PsiDecayConfig {
    fn default() -> Self {
        Self {
            kind: DistanceKind::Euclidean,
            n_max: 100,
            mass: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TfdwConfig {
    pub minimize: MinimizeConfig,
    /// Mass threshold for the concentration radius; half the mass when absent.
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub minimize: MinimizeConfig,
    pub masses: Vec<f64>,
    /// Split fractions `m₁/m` for both tables.
    pub splits: Vec<f64>,
    pub separation: i64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            minimize: MinimizeConfig::default(),
            masses: tfdw_core::minimizer::log_grid(0.1, 50.0, 10),
            splits: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            separation: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DropConfig {
    pub kind: DistanceKind,
    pub volume: usize,
    pub schedule: Schedule,
    pub connected_only: bool,
}

impl Default for DropConfig {
    fn default() -> Self {
        Self {
            kind: DistanceKind::Euclidean,
            volume: 0,
            schedule: Schedule::anneal(1),
            connected_only: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DropScalingConfig {
    pub kind: DistanceKind,
    pub volumes: Vec<usize>,
    pub schedule: Schedule,
    pub connected_only: bool,
    pub slack: f64,
}

impl Default for DropScalingConfig {
    fn default() -> Self {
        Self {
            kind: DistanceKind::Euclidean,
            volumes: vec![16, 32, 64, 128, 256, 512],
            schedule: Schedule::anneal(1),
            connected_only: true,
            slack: 0.5,
        }
    }
}

/// Output directory from the flag, else `runs/<command>`.
pub fn out_dir(flag: Option<PathBuf>, command: &str) -> Result<PathBuf, CliError> {
    let dir = flag.unwrap_or_else(|| default_out(command));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}
