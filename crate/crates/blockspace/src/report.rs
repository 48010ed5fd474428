//! Persisted run reports.

use std::path::Path;

use blockspace_core::estimation::FitConfig;
use blockspace_core::{ExpressionDataset, FitResult, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::io::{read_text, write_text};

pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub path: String,
    pub sha256: String,
}

/// Per-block estimates in reporting form, one-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub k: usize,
    pub r: usize,
    pub mu: f64,
    pub tau: f64,
    pub xi: f64,
    pub tau_over_xi: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub software_version: String,
    pub inputs: Vec<InputFingerprint>,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub model: ModelSpec,
    pub config: FitConfig,
    pub result: FitResult,
    pub blocks: Vec<BlockSummary>,
    pub start_best_logliks: Vec<f64>,
    pub icl: f64,
    pub wall_clock_seconds: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn fingerprint(paths: &[&Path]) -> Result<Vec<InputFingerprint>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputFingerprint {
                path: p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

pub fn block_summaries(result: &FitResult) -> Vec<BlockSummary> {
    let theta = &result.theta;
    let mut out = Vec::with_capacity(theta.blocks().len());
    for k in 0..theta.n_row_clusters() {
        for r in 0..theta.n_col_clusters() {
            let b = theta.get(k, r);
            out.push(BlockSummary {
                k: k + 1,
                r: r + 1,
                mu: b.mu,
                tau: b.tau,
                xi: b.xi,
                tau_over_xi: b.snr(),
                alpha: b.alpha,
                beta: b.beta,
            });
        }
    }
    out
}

impl RunReport {
    pub fn new(
        ds: &ExpressionDataset,
        inputs: Vec<InputFingerprint>,
        model: ModelSpec,
        config: FitConfig,
        result: FitResult,
        wall_clock_seconds: f64,
    ) -> Self {
        RunReport {
            software_version: SOFTWARE_VERSION.to_string(),
            inputs,
            row_ids: ds.row_ids().to_vec(),
            col_ids: ds.col_ids().to_vec(),
            blocks: block_summaries(&result),
            start_best_logliks: result.starts.iter().map(|s| s.best_loglik).collect(),
            icl: result.icl,
            model,
            config,
            result,
            wall_clock_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line() as u64, e.to_string()))
    }
}
