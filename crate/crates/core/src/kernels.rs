//! Isotropic spatial covariance functions and the eigendecomposition cache
//! used to evaluate `tau * K + xi * I` cheaply.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Point;

/// Eigenvalues in `[-CLAMP_TOLERANCE, 0)` are round-off and clamp to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Exponential,
    RationalQuadratic,
    Gaussian,
}

impl KernelKind {
    /// Number of free kernel parameters.
    pub fn dim(self) -> usize {
        match self {
            KernelKind::Exponential | KernelKind::Gaussian => 1,
            KernelKind::RationalQuadratic => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Exponential => "exponential",
            KernelKind::RationalQuadratic => "rational_quadratic",
            KernelKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(KernelKind::Exponential),
            "rational_quadratic" | "rq" => Ok(KernelKind::RationalQuadratic),
            "gaussian" | "squared_exponential" => Ok(KernelKind::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Kernel family plus its strictly positive parameters.
///
/// * Exponential: `[theta]`, `k(d) = exp(-d / theta)`
/// * Rational quadratic: `[theta, alpha]`, `k(d) = (1 + d² / (2 alpha theta²))^-alpha`
/// * Gaussian: `[theta]`, `k(d) = exp(-d² / (2 theta²))`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    kind: KernelKind,
    values: Vec<f64>,
}

impl KernelParams {
    pub fn new(kind: KernelKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != kind.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{kind} kernel takes {} parameters, got {}",
                kind.dim(),
                values.len()
            )));
        }
        for &v in &values {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveParameter {
                    name: "kernel parameter",
                    value: v,
                });
            }
        }
        Ok(KernelParams { kind, values })
    }

    pub fn exponential(theta: f64) -> Result<Self> {
        Self::new(KernelKind::Exponential, alloc::vec![theta])
    }

    pub fn rational_quadratic(theta: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelKind::RationalQuadratic, alloc::vec![theta, alpha])
    }

    pub fn gaussian(theta: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, alloc::vec![theta])
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Covariance at distance `d`. Assumes validated parameters.
    #[inline]
    pub fn eval(&self, d: f64) -> f64 {
        match self.kind {
            KernelKind::Exponential => (-d / self.values[0]).exp(),
            KernelKind::RationalQuadratic => {
                let (theta, alpha) = (self.values[0], self.values[1]);
                (1.0 + d * d / (2.0 * alpha * theta * theta)).powf(-alpha)
            }
            KernelKind::Gaussian => {
                let theta = self.values[0];
                (-d * d / (2.0 * theta * theta)).exp()
            }
        }
    }
}

impl fmt::Display for KernelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.kind)?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for KernelParams {
    type Err = Error;

    /// Parses `kind:v1[,v2]`, e.g. `rational_quadratic:25,2`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("expected `kind:values`, got `{s}`")))?;
        let kind: KernelKind = kind.parse()?;
        let values = rest
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad kernel value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        KernelParams::new(kind, values)
    }
}

/// Kernel value at distance `d ≥ 0`.
pub fn kernel_value(d: f64, params: &KernelParams) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("distance {d} must be non-negative")));
    }
    Ok(params.eval(d))
}

/// Symmetric kernel matrix over `coords`, unit diagonal.
pub fn kernel_matrix(coords: &[Point], params: &KernelParams) -> Result<DMatrix<f64>> {
    if coords.is_empty() {
        return Err(Error::DimensionMismatch(String::from("kernel matrix needs at least one point")));
    }
    let p = coords.len();
    let mut k = DMatrix::identity(p, p);
    for j in 0..p {
        for i in (j + 1)..p {
            let v = params.eval(coords[i].distance(&coords[j]));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Symmetric eigendecomposition of a kernel matrix, eigenvalues descending
/// and clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEigen {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors, one per column, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl KernelEigen {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(λ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * u.transpose()
    }

    /// `log |tau K + xi I|`.
    pub fn logdet(&self, tau: f64, xi: f64) -> f64 {
        self.eigenvalues.iter().map(|&l| (tau * l + xi).ln()).sum()
    }
}

/// Decomposes a symmetric PSD matrix.
pub fn kernel_eigen(k: &DMatrix<f64>) -> Result<KernelEigen> {
    if !k.is_square() || k.nrows() == 0 {
        return Err(Error::DimensionMismatch(String::from("kernel matrix must be square and non-empty")));
    }
    let p = k.nrows();
    if p == 1 {
        return Ok(KernelEigen {
            eigenvalues: DVector::from_element(1, k[(0, 0)].max(0.0)),
            eigenvectors: DMatrix::identity(1, 1),
        });
    }
    let eig = k.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut values = DVector::zeros(p);
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        let l = eig.eigenvalues[src];
        if l < -CLAMP_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: l });
        }
        values[dst] = l.max(0.0);
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(KernelEigen {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Eigendecomposition of the kernel matrix of one column cluster, tagged with
/// the columns and kernel parameters it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEigenCache {
    pub eigen: KernelEigen,
    pub phi_used: KernelParams,
    pub col_cluster: usize,
    /// Dataset column indices of the cluster, ascending.
    pub members: Vec<usize>,
}

impl KernelEigenCache {
    pub fn build(
        coords: &[Point],
        members: Vec<usize>,
        phi: &KernelParams,
        col_cluster: usize,
    ) -> Result<Self> {
        let pts: Vec<Point> = members.iter().map(|&j| coords[j]).collect();
        let k = kernel_matrix(&pts, phi)?;
        Ok(KernelEigenCache {
            eigen: kernel_eigen(&k)?,
            phi_used: phi.clone(),
            col_cluster,
            members,
        })
    }

    /// FNV-1a hash of the member list; cheap staleness key.
    pub fn content_hash(&self) -> u64 {
        members_hash(&self.members)
    }

    /// Fails with `StaleCache` unless built from exactly these columns and `phi`.
    pub fn check(&self, members: &[usize], phi: &KernelParams) -> Result<()> {
        if self.members != members || &self.phi_used != phi {
            return Err(Error::StaleCache {
                col_cluster: self.col_cluster,
            });
        }
        Ok(())
    }
}

pub fn members_hash(members: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &m in members {
        for b in (m as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::E;

    #[test]
    fn analytic_values() {
        let e = KernelParams::exponential(50.0).unwrap();
        assert_eq!(kernel_value(0.0, &e).unwrap(), 1.0);
        assert_relative_eq!(kernel_value(50.0, &e).unwrap(), 1.0 / E, max_relative = 1e-15);
        let g = KernelParams::gaussian(70.0).unwrap();
        assert_relative_eq!(kernel_value(70.0, &g).unwrap(), 0.606_530_659_712_633_4, max_relative = 1e-14);
        let rq = KernelParams::rational_quadratic(50.0, 2.0).unwrap();
        assert_relative_eq!(kernel_value(100.0, &rq).unwrap(), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelParams::exponential(0.0).is_err());
        assert!(KernelParams::rational_quadratic(1.0, -1.0).is_err());
        assert!(KernelParams::new(KernelKind::Gaussian, alloc::vec![1.0, 2.0]).is_err());
        let e = KernelParams::exponential(1.0).unwrap();
        assert!(kernel_value(-1.0, &e).is_err());
    }

    #[test]
    fn parse_roundtrip() {
        let rq: KernelParams = "rational_quadratic:25,2".parse().unwrap();
        assert_eq!(rq, KernelParams::rational_quadratic(25.0, 2.0).unwrap());
        let back: KernelParams = alloc::format!("{rq}").parse().unwrap();
        assert_eq!(back, rq);
    }

    #[test]
    fn small_matrices() {
        let e = KernelParams::exponential(50.0).unwrap();
        let one = kernel_matrix(&[Point::new(3.0, 4.0)], &e).unwrap();
        assert_eq!(one, DMatrix::from_element(1, 1, 1.0));
        let two = kernel_matrix(&[Point::new(0.0, 0.0), Point::new(30.0, 40.0)], &e).unwrap();
        assert_relative_eq!(two[(0, 1)], 1.0 / E, max_relative = 1e-15);
        assert_eq!(two[(0, 1)], two[(1, 0)]);

        let g = KernelParams::gaussian(50.0).unwrap();
        let pts = [Point::new(0.0, 0.0), Point::new(50.0, 0.0), Point::new(100.0, 0.0)];
        let three = kernel_matrix(&pts, &g).unwrap();
        assert_relative_eq!(three[(0, 1)], (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(three[(1, 2)], (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(three[(0, 2)], (-2.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn eigen_of_identity_and_two_by_two() {
        let eig = kernel_eigen(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(eig.eigenvalues.as_slice(), &[1.0; 4]);
        let off = 1.0 / E;
        let k = DMatrix::from_row_slice(2, 2, &[1.0, off, off, 1.0]);
        let eig = kernel_eigen(&k).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], 1.367_879_441_171_442_4, max_relative = 1e-14);
        assert_relative_eq!(eig.eigenvalues[1], 0.632_120_558_828_557_7, max_relative = 1e-14);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(kernel_eigen(&k), Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn stale_cache_detected() {
        let coords = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        let e = KernelParams::exponential(1.0).unwrap();
        let cache = KernelEigenCache::build(&coords, alloc::vec![0, 2], &e, 0).unwrap();
        assert!(cache.check(&[0, 2], &e).is_ok());
        assert!(cache.check(&[0, 1], &e).is_err());
        let other = KernelParams::exponential(2.0).unwrap();
        assert!(cache.check(&[0, 2], &other).is_err());
        assert_ne!(cache.content_hash(), members_hash(&[0, 1]));
    }
}
