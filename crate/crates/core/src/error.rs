use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A single dataset invariant violation. Row and column indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFiniteValue { row: usize, col: usize },
    DuplicateColumnId(String),
    DimensionMismatch(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteValue { row, col } => {
                write!(f, "non-finite value at ({row}, {col})")
            }
            Violation::DuplicateColumnId(id) => write!(f, "duplicate column id `{id}`"),
            Violation::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
        }
    }
}

/// Every violation found while validating a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(ValidationReport),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("parameter `{name}` must be strictly positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("kernel cache for column cluster {col_cluster} is stale")]
    StaleCache { col_cluster: usize },
    #[error("proposal moves need at least two column clusters")]
    SingleColumnCluster,
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),
    #[error("Wishart degrees of freedom {df} below matrix dimension {dim}")]
    DegreesOfFreedomTooSmall { df: usize, dim: usize },
    #[error("invalid scenario configuration: {0}")]
    ConfigInvalid(String),
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label vectors need at least two items")]
    TooShort,
    #[error("inverse-gamma mean undefined for shape {alpha_star} <= 1")]
    UndefinedMean { alpha_star: f64 },
    #[error("credible level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("block ({k}, {r}) has no rows")]
    EmptyBlock { k: usize, r: usize },
    #[error("model selection grid is empty")]
    EmptyGrid,
}

pub type Result<T> = core::result::Result<T, Error>;
