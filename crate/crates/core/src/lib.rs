//! Spatial co-clustering of expression matrices.
//!
//! Rows (genes) and columns (spots with planar coordinates) are partitioned
//! jointly. Within a block, each row segment is Gaussian with a column
//! covariance `σ²(τK + ξI)` built from a spatial kernel, and `σ²` is
//! inverse gamma. Estimation alternates hard row reassignment, a
//! Metropolis-Hastings sampler over column labels and numerical
//! maximization of the block parameters.
//!
//! The crate is `no_std` with `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimation;
pub mod evaluate;
pub mod kernels;
pub mod likelihood;
pub mod optim;
pub mod posterior;
pub mod selection;
pub mod simulate;
pub mod special;
pub mod types;

pub use error::{Error, Result, ValidationReport, Violation};
pub use estimation::{fit, FitConfig};
pub use evaluate::{cer, cer_pairwise};
pub use kernels::{KernelEigen, KernelEigenCache, KernelKind, KernelParams};
pub use selection::{icl, select, SelectionTable};
pub use types::{
    BlockGrid, BlockParameters, CoClusterLabels, ExpressionDataset, FitResult, ModelSpec, Point, StartSummary,
};
