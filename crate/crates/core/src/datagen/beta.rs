use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::CoefficientVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Nonzeros at positions 1..=s.
    Consecutive,
    /// Nonzeros at 1, 1 + p/s, 1 + 2p/s, ...
    Equispaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    pub p: usize,
    pub s: usize,
    pub placement: Placement,
    #[serde(default = "default_value")]
    pub value: f64,
}

fn default_value() -> f64 {
    1.0
}

impl BetaSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.s > self.p {
            return Err(invalid(format!("need 1 <= s <= p, got s = {}, p = {}", self.s, self.p)));
        }
        if !self.value.is_finite() || self.value == 0.0 {
            return Err(invalid(format!("coefficient value {} must be finite and nonzero", self.value)));
        }
        Ok(())
    }

    /// 0-based positions of the nonzero coefficients.
    pub fn positions(&self) -> Vec<usize> {
        match self.placement {
            Placement::Consecutive => (0..self.s).collect(),
            Placement::Equispaced => {
                let spacing = self.p / self.s;
                (0..self.s).map(|t| t * spacing).collect()
            }
        }
    }
}

pub fn place_beta(spec: &BetaSpec) -> Result<CoefficientVector> {
    spec.validate()?;
    let mut beta = vec![0.0; spec.p];
    for j in spec.positions() {
        beta[j] = spec.value;
    }
    Ok(CoefficientVector::from_vec(beta))
}

/// `βᵀΣβ / τ`.
pub fn noise_variance(beta: &CoefficientVector, sigma: &DMatrix<f64>, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("signal-to-noise ratio {tau} must be positive")));
    }
    let b = beta.values();
    if sigma.nrows() != b.len() || sigma.ncols() != b.len() {
        return Err(invalid(format!(
            "covariance is {}x{} but beta has length {}",
            sigma.nrows(),
            sigma.ncols(),
            b.len()
        )));
    }
    let signal = (sigma * b).dot(b);
    if !(signal > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    Ok(signal / tau)
}
