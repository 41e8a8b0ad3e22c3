use nalgebra::{DMatrix, DVector};

use super::gram::RIDGE_FALLBACK;
use crate::model::{CoefficientVector, Dataset, SupportSet};

/// Least squares of `y` on the columns in `support`; zero elsewhere.
///
/// Solved by Householder QR of the selected columns. A support whose columns
/// are numerically rank deficient falls back to ridge-regularized normal
/// equations with [`RIDGE_FALLBACK`] on the diagonal. The returned RSS is
/// computed from the explicit residual.
pub fn least_squares_on_support(dataset: &Dataset, support: &SupportSet) -> (CoefficientVector, f64) {
    let p = dataset.p();
    let y = dataset.y();
    if support.is_empty() {
        return (CoefficientVector::zeros(p), y.norm_squared());
    }
    let xs = dataset.x().select_columns(support.indices());
    let beta_s = solve_columns(&xs, y);
    let rss = (y - &xs * &beta_s).norm_squared();
    let coef = CoefficientVector::from_support(p, support, beta_s.as_slice());
    (coef, rss)
}

pub(crate) fn solve_columns(xs: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (n, m) = xs.shape();
    if m <= n {
        let qr = xs.clone().qr();
        let r = qr.r();
        let diag_max = r.diagonal().amax();
        let full_rank = diag_max > 0.0 && r.diagonal().iter().all(|d| d.abs() > 1e-10 * diag_max);
        if full_rank {
            let qty = qr.q().tr_mul(y);
            if let Some(beta) = r.solve_upper_triangular(&qty) {
                return beta;
            }
        }
    }
    let g = xs.tr_mul(xs) + DMatrix::identity(m, m) * RIDGE_FALLBACK;
    let b = xs.tr_mul(y);
    match g.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => g.svd(true, true).solve(&b, 1e-14).unwrap_or_else(|_| DVector::zeros(m)),
    }
}
