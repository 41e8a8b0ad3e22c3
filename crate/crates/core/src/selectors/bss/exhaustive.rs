use itertools::Itertools;

use super::BssSolution;
use crate::error::{invalid, Error, Result};
use crate::model::{Dataset, SupportSet};
use crate::selectors::least_squares::least_squares_on_support;

/// Largest number of supports [`bss_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Best subset by enumeration. Supersets never have larger RSS, so only the
/// supports of size `min(k, p)` are visited; among equal RSS the
/// lexicographically first support wins.
pub fn bss_exhaustive(dataset: &Dataset, k: usize) -> Result<BssSolution> {
    let (n, p) = (dataset.n(), dataset.p());
    if k == 0 || k > n.min(p) {
        return Err(invalid(format!("k = {k} must lie in 1..={}", n.min(p))));
    }
    let count = binomial(p, k);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge {
            p,
            k,
            count,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut best: Option<(SupportSet, f64)> = None;
    for combo in (0..p).combinations(k) {
        let support = SupportSet::new(combo);
        let (_, rss) = least_squares_on_support(dataset, &support);
        if best.as_ref().is_none_or(|b| rss < b.1) {
            best = Some((support, rss));
        }
    }
    let (support, _) = best.expect("p >= k >= 1");
    let (coefficients, rss) = least_squares_on_support(dataset, &support);
    Ok(BssSolution {
        k,
        support,
        coefficients,
        rss,
        certified: true,
        gap: 0.0,
        nodes_explored: count as u64,
        elapsed_ms: 0,
        work_units: 0,
    })
}
