use nalgebra::{DMatrix, DVector};

use crate::model::Dataset;

/// Ridge added to the normal equations when a support is rank deficient.
pub const RIDGE_FALLBACK: f64 = 1e-10;

/// Precomputed `XᵀX`, `Xᵀy` and `yᵀy` shared by the Gram-based solvers.
#[derive(Debug, Clone)]
pub struct GramCache {
    pub gram: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub n: usize,
    pub p: usize,
}

impl GramCache {
    pub fn new(dataset: &Dataset) -> Self {
        let x = dataset.x();
        let y = dataset.y();
        GramCache {
            gram: x.tr_mul(x),
            xty: x.tr_mul(y),
            yty: y.norm_squared(),
            n: dataset.n(),
            p: dataset.p(),
        }
    }

    pub fn submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        let m = idx.len();
        DMatrix::from_fn(m, m, |a, b| self.gram[(idx[a], idx[b])])
    }

    pub fn subvector(&self, idx: &[usize]) -> DVector<f64> {
        DVector::from_fn(idx.len(), |a, _| self.xty[idx[a]])
    }

    /// Least squares on the columns `idx` through the normal equations.
    /// Returns coefficients in `idx` order and `yᵀy - bᵀβ`, clamped at 0.
    pub fn solve_subset(&self, idx: &[usize]) -> (DVector<f64>, f64) {
        if idx.is_empty() {
            return (DVector::zeros(0), self.yty);
        }
        let g = self.submatrix(idx);
        let b = self.subvector(idx);
        let beta = match g.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => {
                let m = idx.len();
                let ridged = g + DMatrix::identity(m, m) * RIDGE_FALLBACK;
                match ridged.cholesky() {
                    Some(ch) => ch.solve(&b),
                    None => pseudo_solve(&self.submatrix(idx), &b),
                }
            }
        };
        let rss = (self.yty - b.dot(&beta)).max(0.0);
        (beta, rss)
    }

    /// Unit cost of [`Self::solve_subset`] on `m` columns.
    pub fn solve_cost(m: usize) -> u64 {
        let m = m as u64;
        m * m * m / 3 + 2 * m * m + 16
    }
}

fn pseudo_solve(g: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = g.clone().svd(true, true);
    svd.solve(b, 1e-12).unwrap_or_else(|_| DVector::zeros(b.len()))
}
