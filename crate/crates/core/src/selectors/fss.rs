//! Forward stepwise selection.
//!
//! Each step adds the inactive column maximizing
//! `|xⱼᵀ(I - P)y| / ||(I - P)xⱼ||₂`, where `P` projects onto the span of the
//! active columns, then refits least squares on the enlarged active set. The
//! projection is maintained with an orthonormal basis of the active columns
//! (modified Gram-Schmidt with one reorthogonalization pass).

use nalgebra::DVector;

use super::least_squares::least_squares_on_support;
use crate::error::{invalid, Error, Result};
use crate::model::{CoefficientVector, Dataset, SupportSet};

/// Columns whose residual norm after projection falls below this are skipped.
pub const DEGENERATE_NORM: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FssStep {
    pub selected: usize,
    pub active: SupportSet,
    pub coefficients: CoefficientVector,
    pub rss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FssTrace {
    pub steps: Vec<FssStep>,
    pub work: u64,
}

impl FssTrace {
    /// The model with `k` active variables (`k >= 1`).
    pub fn step(&self, k: usize) -> Option<&FssStep> {
        k.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn forward_stepwise(dataset: &Dataset, k_max: usize) -> Result<FssTrace> {
    let (n, p) = (dataset.n(), dataset.p());
    if k_max == 0 || k_max > p.min(n - 1) {
        return Err(invalid(format!("k_max = {k_max} must lie in 1..={}", p.min(n - 1))));
    }
    let x = dataset.x();
    let mut resid = dataset.y().clone();
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let mut proj_sq = col_sq.clone();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k_max);
    let mut in_model = vec![false; p];
    let mut order = Vec::with_capacity(k_max);
    let mut steps = Vec::with_capacity(k_max);
    let mut work = 0u64;

    for step in 1..=k_max {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..p {
            if in_model[j] {
                continue;
            }
            // exact recomputation when the running value has lost most of its digits
            if proj_sq[j] < 1e-6 * col_sq[j] {
                let mut v = x.column(j).into_owned();
                for q in &basis {
                    let c = q.dot(&v);
                    v.axpy(-c, q, 1.0);
                }
                proj_sq[j] = v.norm_squared();
                work += (2 * n * basis.len()) as u64;
            }
            let norm = proj_sq[j].max(0.0).sqrt();
            if norm < DEGENERATE_NORM {
                continue;
            }
            let score = x.column(j).dot(&resid).abs() / norm;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        work += (2 * n * p) as u64;
        let (j, _) = best.ok_or(Error::DegenerateCandidate { step })?;

        let mut q = x.column(j).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&q);
                q.axpy(-c, b, 1.0);
            }
        }
        let qn = q.norm();
        q /= qn;
        let c = q.dot(&resid);
        resid.axpy(-c, &q, 1.0);
        for i in 0..p {
            if !in_model[i] && i != j {
                let c = q.dot(&x.column(i));
                proj_sq[i] -= c * c;
            }
        }
        work += (2 * n * p + 4 * n * basis.len()) as u64;
        basis.push(q);
        in_model[j] = true;
        order.push(j);

        let active = SupportSet::new(order.iter().copied());
        let (coefficients, rss) = least_squares_on_support(dataset, &active);
        work += (2 * n * step * step) as u64;
        steps.push(FssStep {
            selected: j,
            active,
            coefficients,
            rss,
        });
    }
    Ok(FssTrace { steps, work })
}
