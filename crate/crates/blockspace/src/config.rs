//! Flat TOML configuration files. Keys mirror the field names of
//! `ModelSpec`, `FitConfig` and `ScenarioConfig`; unknown keys are errors.
//!
//! Fit file:
//!
//! ```toml
//! row_clusters = 3
//! col_clusters = 3
//! kernel = "exponential"
//! max_iterations = 40
//! n_starts = 3
//! seed = 7
//! ```
//!
//! Grid file: as above with `row_clusters`, `col_clusters` as lists and
//! `kernels` (list of families) in place of `kernel`.

use std::path::{Path, PathBuf};

use blockspace_core::estimation::FitConfig;
use blockspace_core::simulate::{CoordsSource, Scenario, ScenarioConfig, WishartSpec};
use blockspace_core::types::DEFAULT_C_DELTA;
use blockspace_core::{KernelKind, KernelParams, ModelSpec};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::io::{read_coords, read_text};

fn config_error(path: &Path, message: impl ToString) -> CliError {
    CliError::Config {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn parse_table(path: &Path) -> Result<toml::Table> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| config_error(path, e))
}

fn take<T: DeserializeOwned>(path: &Path, table: &mut toml::Table, key: &str) -> Result<Option<T>> {
    match table.remove(key) {
        None => Ok(None),
        Some(v) => v.try_into().map(Some).map_err(|e| config_error(path, format!("`{key}`: {e}"))),
    }
}

fn require<T: DeserializeOwned>(path: &Path, table: &mut toml::Table, key: &str) -> Result<T> {
    take(path, table, key)?.ok_or_else(|| config_error(path, format!("missing key `{key}`")))
}

fn parse_kernels(path: &Path, specs: Vec<String>) -> Result<Vec<KernelParams>> {
    specs
        .iter()
        .map(|s| s.parse().map_err(|e| config_error(path, e)))
        .collect()
}

fn finish_fit(path: &Path, table: toml::Table) -> Result<FitConfig> {
    let cfg: FitConfig = toml::Value::Table(table).try_into().map_err(|e| config_error(path, e))?;
    cfg.validate().map_err(|e| config_error(path, e))?;
    Ok(cfg)
}

/// Model and run settings of the `fit` command.
pub fn load_fit_config(path: &Path) -> Result<(ModelSpec, FitConfig)> {
    let mut t = parse_table(path)?;
    let k: usize = require(path, &mut t, "row_clusters")?;
    let r: usize = require(path, &mut t, "col_clusters")?;
    let kernel: KernelKind = take::<String>(path, &mut t, "kernel")?
        .map(|s| s.parse().map_err(|e| config_error(path, e)))
        .transpose()?
        .unwrap_or(KernelKind::Exponential);
    let c_delta: f64 = take(path, &mut t, "c_delta")?.unwrap_or(DEFAULT_C_DELTA);
    let phi = parse_kernels(path, take(path, &mut t, "phi")?.unwrap_or_default())?;
    let spec = ModelSpec::new(k, r, kernel).with_c_delta(c_delta).with_phi(phi);
    spec.validate().map_err(|e| config_error(path, e))?;
    Ok((spec, finish_fit(path, t)?))
}

/// Candidate grid and run settings of the `select` command.
pub fn load_grid_config(path: &Path) -> Result<(Vec<ModelSpec>, FitConfig)> {
    let mut t = parse_table(path)?;
    let ks: Vec<usize> = require(path, &mut t, "row_clusters")?;
    let rs: Vec<usize> = require(path, &mut t, "col_clusters")?;
    let kernels: Vec<String> = take(path, &mut t, "kernels")?.unwrap_or_else(|| vec!["exponential".into()]);
    let c_delta: f64 = take(path, &mut t, "c_delta")?.unwrap_or(DEFAULT_C_DELTA);
    let mut grid = Vec::new();
    for kind in &kernels {
        let kind: KernelKind = kind.parse().map_err(|e| config_error(path, e))?;
        for &k in &ks {
            for &r in &rs {
                let spec = ModelSpec::new(k, r, kind).with_c_delta(c_delta);
                spec.validate().map_err(|e| config_error(path, e))?;
                grid.push(spec);
            }
        }
    }
    if grid.is_empty() {
        return Err(config_error(path, "empty grid"));
    }
    Ok((grid, finish_fit(path, t)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    scenario: Scenario,
    #[serde(default)]
    row_sizes: Option<Vec<usize>>,
    #[serde(default)]
    col_sizes: Option<Vec<usize>>,
    #[serde(default)]
    snr: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    c_true: Option<f64>,
    #[serde(default)]
    kernels: Vec<String>,
    #[serde(default)]
    wishart: Vec<WishartSpec>,
    #[serde(default)]
    coords_file: Option<PathBuf>,
    #[serde(default)]
    lambda_s: Option<f64>,
    #[serde(default)]
    lambda_b: Option<f64>,
    #[serde(default)]
    seed: u64,
}

/// Scenario settings of the `simulate` command. Omitted keys take the
/// scenario's preset at 50 rows and 50 columns per cluster. A relative
/// `coords_file` is resolved against the config file's directory.
pub fn load_scenario_config(path: &Path) -> Result<ScenarioConfig> {
    let text = read_text(path)?;
    let file: SimulateFile = toml::from_str(&text).map_err(|e| config_error(path, e))?;
    let mut cfg = ScenarioConfig::preset(file.scenario, 50, 50, file.seed);
    if let Some(v) = file.row_sizes {
        cfg.row_sizes = v;
    }
    if let Some(v) = file.col_sizes {
        cfg.col_sizes = v;
    }
    if let Some(v) = file.snr {
        cfg.snr = v;
    }
    if let Some(v) = file.c_true {
        cfg.c_true = v;
    }
    if let Some(v) = file.lambda_s {
        cfg.lambda_s = v;
    }
    if let Some(v) = file.lambda_b {
        cfg.lambda_b = v;
    }
    cfg.kernels = parse_kernels(path, file.kernels)?;
    cfg.wishart = file.wishart;
    if let Some(coords) = file.coords_file {
        let coords = if coords.is_relative() {
            path.parent().unwrap_or(Path::new(".")).join(coords)
        } else {
            coords
        };
        cfg.coords = CoordsSource::Points(read_coords(&coords)?.into_iter().map(|(_, p)| p).collect());
    }
    cfg.validate().map_err(|e| config_error(path, e))?;
    Ok(cfg)
}
