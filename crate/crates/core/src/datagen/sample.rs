use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{build_covariance, noise_variance, place_beta, BetaSpec, CovarianceSpec, CovarianceStructure, Placement};
use crate::error::{invalid, Error, Result};
use crate::model::{standardize_columns, Dataset, Provenance};

/// Ten log-spaced signal-to-noise ratios between 0.05 and 6.
pub const SNR_GRID: [f64; 10] = [0.05, 0.09, 0.14, 0.25, 0.42, 0.71, 1.22, 2.07, 3.52, 6.00];

const CHOLESKY_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Synthetic {
        covariance: CovarianceSpec,
        placement: Placement,
        s: usize,
        value: f64,
    },
    /// Rows and columns subsampled from a real expression matrix; `n` and `p`
    /// of the scenario are the subsample sizes.
    SemiSynthetic,
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario_id: String,
    pub n: usize,
    pub p: usize,
    pub tau: f64,
    pub replications: usize,
    pub design: Design,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scenario_id.is_empty() {
            return Err(invalid("scenario_id must not be empty"));
        }
        if self.n < 2 || self.p == 0 {
            return Err(invalid(format!("need n >= 2 and p >= 1, got n = {}, p = {}", self.n, self.p)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid(format!("tau = {} must be positive", self.tau)));
        }
        if let Design::Synthetic { covariance, .. } = &self.design {
            covariance.validate(self.p)?;
            self.beta_spec().expect("synthetic").validate()?;
        }
        Ok(())
    }

    pub fn beta_spec(&self) -> Option<BetaSpec> {
        match self.design {
            Design::Synthetic { placement, s, value, .. } => Some(BetaSpec {
                p: self.p,
                s,
                placement,
                value,
            }),
            Design::SemiSynthetic => None,
        }
    }
}

fn lower_factor(sigma: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if let Some(ch) = sigma.clone().cholesky() {
        return Ok(ch.l());
    }
    let jittered = sigma + DMatrix::identity(p, p) * CHOLESKY_JITTER;
    jittered.cholesky().map(|c| c.l()).ok_or(Error::FactorizationFailure)
}

/// Draws one synthetic dataset. Deterministic in `(spec, seed)`.
///
/// Rows of X are N(0, Σ) through the Cholesky factor of Σ, columns are then
/// standardized, σ² comes from the population Σ and the generating β, and
/// `y = Xβ + ε` is formed on the standardized design.
pub fn sample_dataset(spec: &ScenarioSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let covariance = match &spec.design {
        Design::Synthetic { covariance, .. } => *covariance,
        Design::SemiSynthetic => {
            return Err(invalid("semi-synthetic scenarios are built from an expression matrix"))
        }
    };
    let (n, p) = (spec.n, spec.p);
    let sigma = build_covariance(&covariance, p)?;
    let beta = place_beta(&spec.beta_spec().expect("synthetic"))?;
    let sigma2 = noise_variance(&beta, &sigma, spec.tau)?;

    let factor = match covariance.structure {
        CovarianceStructure::Identity => None,
        _ => Some(lower_factor(sigma)?),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let z = DMatrix::from_row_slice(n, p, &draws);
    let x_raw = match factor {
        None => z,
        Some(l) => z * l.transpose(),
    };
    let st = standardize_columns(&x_raw)?;

    let sd = sigma2.sqrt();
    let eps = DVector::from_fn(n, |_, _| { let z: f64 = StandardNormal.sample(&mut rng); sd * z });
    let y = &st.x * beta.values() + eps;

    Dataset::new(
        st.x,
        y,
        beta.support(),
        sigma2,
        Provenance::Synthetic {
            scenario_id: spec.scenario_id.clone(),
            seed,
        },
    )
}

/// Short content hash of a dataset's design and response.
pub fn dataset_digest(dataset: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((dataset.n() as u64).to_le_bytes());
    h.update((dataset.p() as u64).to_le_bytes());
    for v in dataset.x().iter().chain(dataset.y().iter()) {
        h.update(v.to_le_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::CovarianceSpec;

    pub(crate) fn scenario(n: usize, p: usize, cov: CovarianceSpec, placement: Placement, tau: f64) -> ScenarioSpec {
        ScenarioSpec {
            scenario_id: "test".into(),
            n,
            p,
            tau,
            replications: 1,
            design: Design::Synthetic {
                covariance: cov,
                placement,
                s: 10,
                value: 1.0,
            },
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let spec = scenario(60, 20, CovarianceSpec::toeplitz(0.7), Placement::Consecutive, 1.22);
        let a = sample_dataset(&spec, 99).unwrap();
        let b = sample_dataset(&spec, 99).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        assert_eq!(dataset_digest(&a), dataset_digest(&b));
        let c = sample_dataset(&spec, 100).unwrap();
        assert_ne!(dataset_digest(&a), dataset_digest(&c));
    }

    #[test]
    fn sampled_design_is_standardized_and_truth_recorded() {
        let spec = scenario(50, 100, CovarianceSpec::block(0.7, 10), Placement::Equispaced, 0.42);
        let d = sample_dataset(&spec, 1).unwrap();
        assert_eq!(d.true_support().one_based(), vec![1, 11, 21, 31, 41, 51, 61, 71, 81, 91]);
        // one true predictor per block: no cross terms in the quadratic form
        assert!((d.sigma2() - 10.0 / 0.42).abs() < 1e-12);
    }

    #[test]
    fn identity_design_is_nearly_uncorrelated() {
        // Under independence r is approximately N(0, 1/n): the pooled signed
        // mean is ~0 and E|r| = sqrt(2/(pi n)) ~ 0.0252 at n = 1000.
        let spec = scenario(1000, 100, CovarianceSpec::identity(), Placement::Consecutive, 1.0);
        let mut total = 0.0;
        let mut signed = 0.0;
        let mut count = 0usize;
        for rep in 0..200u64 {
            let d = sample_dataset(&spec, 1000 + rep).unwrap();
            let c = d.x().transpose() * d.x() / 1000.0;
            for u in 0..100 {
                for v in (u + 1)..100 {
                    total += c[(u, v)].abs();
                    signed += c[(u, v)];
                    count += 1;
                }
            }
        }
        let mean = total / count as f64;
        let expected = (2.0 / (std::f64::consts::PI * 1000.0)).sqrt();
        assert!((signed / count as f64).abs() < 0.02);
        assert!((mean - expected).abs() < 0.001, "mean |r| = {mean}, expected {expected}");
    }

    #[test]
    fn realized_snr_matches_target() {
        let spec = scenario(1000, 100, CovarianceSpec::toeplitz(0.35), Placement::Consecutive, 2.07);
        let mut ratio = 0.0;
        for rep in 0..50u64 {
            let d = sample_dataset(&spec, rep).unwrap();
            let beta = place_beta(&spec.beta_spec().unwrap()).unwrap();
            let signal = d.x() * beta.values();
            let mean = signal.mean();
            let var = signal.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1000.0;
            ratio += var / d.sigma2();
        }
        ratio /= 50.0;
        assert!((1.86..=2.28).contains(&ratio), "realized snr {ratio}");
    }

    #[test]
    fn true_coefficients_recovered_within_three_standard_errors() {
        let spec = scenario(1000, 100, CovarianceSpec::identity(), Placement::Consecutive, 6.0);
        let (mut inside, mut total) = (0usize, 0usize);
        for rep in 0..100u64 {
            let d = sample_dataset(&spec, 500 + rep).unwrap();
            let s = d.true_support().indices().to_vec();
            let xs = d.x().select_columns(&s);
            let gram = xs.transpose() * &xs;
            let inv = gram.clone().try_inverse().unwrap();
            let bhat = &inv * (xs.transpose() * d.y());
            let resid = d.y() - &xs * &bhat;
            let s2 = resid.norm_squared() / (1000 - s.len()) as f64;
            for i in 0..s.len() {
                let se = (s2 * inv[(i, i)]).sqrt();
                total += 1;
                if (bhat[i] - 1.0).abs() <= 3.0 * se {
                    inside += 1;
                }
            }
        }
        assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
    }

    #[test]
    fn semisynthetic_design_needs_a_matrix() {
        let mut spec = scenario(50, 20, CovarianceSpec::identity(), Placement::Consecutive, 1.0);
        spec.design = Design::SemiSynthetic;
        assert!(sample_dataset(&spec, 0).is_err());
    }
}
