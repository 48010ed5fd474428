//! Classification-stochastic EM.
//!
//! Each iteration runs a hard reassignment of the rows (CE step), a
//! Metropolis-Hastings sweep over column labelings (SE step) and a bounded
//! numerical maximization of the block and kernel parameters (M step). The
//! estimate is the state at the iteration with the largest classification
//! log-likelihood over all independent starts.

mod fit;
mod init;
pub mod proposals;
mod steps;

use serde::{Deserialize, Serialize};

pub use fit::{assemble_fit, fit, fit_start, ChainState, StartOutcome};
pub use init::{initial_labels, initial_phi, initial_theta, kmeans, perturb_labels};
pub use proposals::{m1_log_ratio, m2_log_ratio, propose_m1, propose_m2, MoveKind, ProposalOutcome};
pub use steps::{build_views, ce_step, m_step, se_step, total_loglik, MStepOutcome, SeStats};

use crate::error::{Error, Result};

/// Run-length, sampler and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub se_repeats_per_iteration: usize,
    /// Largest number of labels changed by one proposal.
    pub m_max: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub move_m1_probability: f64,
    /// Relative objective decrease below which the M-step optimizer stops.
    pub optimizer_tolerance: f64,
    pub optimizer_max_iterations: usize,
    /// Lower bound for tau, xi, alpha, beta and kernel parameters.
    pub parameter_floor: f64,
    /// Fraction of labels reassigned at random for starts after the first.
    pub perturbation_fraction: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 5000,
            se_repeats_per_iteration: 100,
            m_max: 5,
            n_starts: 5,
            seed: 0,
            move_m1_probability: 0.5,
            optimizer_tolerance: 1e-6,
            optimizer_max_iterations: 100,
            parameter_floor: 1e-4,
            perturbation_fraction: 0.2,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("max_iterations", self.max_iterations),
            ("se_repeats_per_iteration", self.se_repeats_per_iteration),
            ("m_max", self.m_max),
            ("n_starts", self.n_starts),
            ("optimizer_max_iterations", self.optimizer_max_iterations),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter(alloc::format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("move_m1_probability", self.move_m1_probability),
            ("perturbation_fraction", self.perturbation_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.parameter_floor > 0.0) || !(self.optimizer_tolerance > 0.0) {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "parameter_floor and optimizer_tolerance must be positive",
            )));
        }
        Ok(())
    }
}
