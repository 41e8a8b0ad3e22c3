use std::cell::OnceCell;

use nalgebra::DVector;

use crate::model::Dataset;
use crate::selectors::gram::GramCache;
use crate::work::Meter;

/// Per-dataset state shared by the warm start and the branch-and-bound
/// solves for every `k`.
pub struct BssContext<'a> {
    pub dataset: &'a Dataset,
    pub gram: GramCache,
    lipschitz: OnceCell<f64>,
}

impl<'a> BssContext<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        BssContext {
            dataset,
            gram: GramCache::new(dataset),
            lipschitz: OnceCell::new(),
        }
    }

    /// Work units spent building the Gram matrix.
    pub fn setup_cost(&self) -> u64 {
        let (n, p) = (self.gram.n as u64, self.gram.p as u64);
        n * p * (p + 1) / 2 + n * p
    }

    /// An upper estimate of the largest eigenvalue of `2XᵀX`, the gradient
    /// Lipschitz constant of the least-squares loss.
    pub fn lipschitz(&self, meter: &mut Meter) -> f64 {
        *self.lipschitz.get_or_init(|| {
            let g = &self.gram.gram;
            let p = self.gram.p;
            let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
            let mut est = 0.0;
            for _ in 0..300 {
                let w = g * &v;
                meter.charge((2 * p * p) as u64);
                let norm = w.norm();
                if norm == 0.0 {
                    break;
                }
                let next = v.dot(&w);
                v = w / norm;
                if (next - est).abs() <= 1e-10 * next {
                    est = next;
                    break;
                }
                est = next;
            }
            // power iteration approaches from below; keep a margin
            2.0 * est.max(f64::MIN_POSITIVE) * 1.05
        })
    }
}
