//! Best subset selection: `min ||y - Xβ||²` subject to `||β||₀ ≤ k`.

mod branch_bound;
mod context;
mod exhaustive;
mod warm_start;

pub use branch_bound::{bss_branch_and_bound, branch_and_bound_with, GAP_TOL, MAX_RELAX_DIM, PRUNE_TOL};
pub use context::BssContext;
pub use exhaustive::{binomial, bss_exhaustive, EXHAUSTIVE_LIMIT};
pub use warm_start::{bss_warm_start, warm_start_with, WarmStart, WarmStartOptions, DEFAULT_RESTARTS};

use crate::model::{CoefficientVector, SupportSet};

#[derive(Debug, Clone, PartialEq)]
pub struct BssSolution {
    pub k: usize,
    pub support: SupportSet,
    pub coefficients: CoefficientVector,
    /// Least-squares RSS on `support`, from an explicit residual.
    pub rss: f64,
    pub certified: bool,
    /// `(incumbent - best remaining bound) / incumbent`; 0 when certified.
    pub gap: f64,
    pub nodes_explored: u64,
    pub elapsed_ms: u64,
    pub work_units: u64,
}
