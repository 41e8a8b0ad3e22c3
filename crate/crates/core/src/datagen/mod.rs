//! Synthetic and semi-synthetic dataset generation.

mod beta;
mod covariance;
mod expression;
mod sample;
mod seed;
mod semisynthetic;

pub use beta::{noise_variance, place_beta, BetaSpec, Placement};
pub use covariance::{build_covariance, CovarianceSpec, CovarianceStructure};
pub use expression::{load_expression_matrix, parse_expression_matrix, ExpressionMatrix};
pub use sample::{dataset_digest, sample_dataset, Design, ScenarioSpec, SNR_GRID};
pub use seed::child_seed;
pub use semisynthetic::{build_semisynthetic, true_predictor_mean_correlation, SEMISYNTHETIC_S};
