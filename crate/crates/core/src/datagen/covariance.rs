use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceStructure {
    Identity,
    Toeplitz,
    Block,
}

/// Population correlation structure of the synthetic design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    pub structure: CovarianceStructure,
    /// Ignored for [`CovarianceStructure::Identity`].
    #[serde(default)]
    pub rho: f64,
    /// Only used by [`CovarianceStructure::Block`].
    #[serde(default = "default_block_size")]
    pub block_size: usize,
}

fn default_block_size() -> usize {
    10
}

impl CovarianceSpec {
    pub fn identity() -> Self {
        CovarianceSpec {
            structure: CovarianceStructure::Identity,
            rho: 0.0,
            block_size: default_block_size(),
        }
    }

    pub fn toeplitz(rho: f64) -> Self {
        CovarianceSpec {
            structure: CovarianceStructure::Toeplitz,
            rho,
            block_size: default_block_size(),
        }
    }

    pub fn block(rho: f64, block_size: usize) -> Self {
        CovarianceSpec {
            structure: CovarianceStructure::Block,
            rho,
            block_size,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.structure != CovarianceStructure::Identity && !(0.0..1.0).contains(&self.rho) {
            return Err(invalid(format!("rho = {} must lie in [0, 1)", self.rho)));
        }
        if self.structure == CovarianceStructure::Block
            && (self.block_size == 0 || !p.is_multiple_of(self.block_size))
        {
            return Err(Error::InvalidBlockPartition {
                p,
                block_size: self.block_size,
            });
        }
        Ok(())
    }
}

/// Builds the p×p correlation matrix described by `spec`.
pub fn build_covariance(spec: &CovarianceSpec, p: usize) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(invalid("covariance dimension must be positive"));
    }
    spec.validate(p)?;
    let rho = spec.rho;
    let m = match spec.structure {
        CovarianceStructure::Identity => DMatrix::identity(p, p),
        CovarianceStructure::Toeplitz => {
            DMatrix::from_fn(p, p, |u, v| rho.powi(u.abs_diff(v) as i32))
        }
        CovarianceStructure::Block => {
            let b = spec.block_size;
            DMatrix::from_fn(p, p, |u, v| {
                if u == v {
                    1.0
                } else if u / b == v / b {
                    rho
                } else {
                    0.0
                }
            })
        }
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toeplitz_entries() {
        let s = build_covariance(&CovarianceSpec::toeplitz(0.5), 4).unwrap();
        assert_eq!(s[(0, 2)], 0.25);
        assert_eq!(s[(0, 3)], 0.125);
        assert_eq!(s[(3, 0)], 0.125);
        assert_eq!(s[(2, 2)], 1.0);
    }

    #[test]
    fn block_entries() {
        let s = build_covariance(&CovarianceSpec::block(0.7, 10), 20).unwrap();
        assert_eq!(s[(0, 4)], 0.7);
        assert_eq!(s[(0, 14)], 0.0);
        assert_eq!(s[(12, 19)], 0.7);
        assert_eq!(s[(9, 10)], 0.0);
    }

    #[test]
    fn identity_is_identity() {
        let s = build_covariance(&CovarianceSpec::identity(), 3).unwrap();
        assert_eq!(s, DMatrix::identity(3, 3));
    }

    #[test]
    fn block_requires_divisible_dimension() {
        let err = build_covariance(&CovarianceSpec::block(0.35, 10), 25).unwrap_err();
        assert!(matches!(err, Error::InvalidBlockPartition { p: 25, block_size: 10 }));
    }

    #[test]
    fn grid_structures_are_positive_definite() {
        for p in [100, 500, 1000] {
            for spec in [
                CovarianceSpec::identity(),
                CovarianceSpec::toeplitz(0.35),
                CovarianceSpec::toeplitz(0.7),
                CovarianceSpec::block(0.35, 10),
                CovarianceSpec::block(0.7, 10),
            ] {
                let s = build_covariance(&spec, p).unwrap();
                assert_eq!(s, s.transpose());
                assert!(s.cholesky().is_some(), "{spec:?} p={p}");
            }
        }
    }
}
