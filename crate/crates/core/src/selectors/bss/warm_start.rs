//! Discrete first-order warm start: iterative hard thresholding on the
//! least-squares loss, polished by least squares on the final support.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::context::BssContext;
use crate::error::{invalid, Result};
use crate::model::{Dataset, SupportSet};
use crate::selectors::fss::forward_stepwise;
use crate::selectors::gram::GramCache;
use crate::work::{BudgetClock, Meter};

pub const DEFAULT_RESTARTS: usize = 50;

#[derive(Debug, Clone)]
pub struct WarmStartOptions {
    /// Random initializations, in addition to the forward stepwise one.
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Iterations with an unchanged support after which a run stops.
    pub stable_iters: usize,
    /// Forward stepwise support of size `k`; computed when absent.
    pub fss_init: Option<SupportSet>,
    /// Further feasible supports, evaluated as they are and used as IHT starts.
    pub candidates: Vec<SupportSet>,
}

impl Default for WarmStartOptions {
    fn default() -> Self {
        WarmStartOptions {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            max_iter: 500,
            stable_iters: 10,
            fss_init: None,
            candidates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub support: SupportSet,
    /// Least-squares RSS on `support` from the normal equations.
    pub rss: f64,
}

pub fn bss_warm_start(dataset: &Dataset, k: usize, restarts: usize) -> Result<SupportSet> {
    let ctx = BssContext::new(dataset);
    let opts = WarmStartOptions {
        restarts,
        ..Default::default()
    };
    let mut meter = Meter::new(BudgetClock::Work);
    Ok(warm_start_with(&ctx, k, &opts, &mut meter)?.support)
}

pub fn warm_start_with(ctx: &BssContext, k: usize, opts: &WarmStartOptions, meter: &mut Meter) -> Result<WarmStart> {
    let (n, p) = (ctx.gram.n, ctx.gram.p);
    if k == 0 || k > n.min(p) {
        return Err(invalid(format!("k = {k} must lie in 1..={}", n.min(p))));
    }
    let lip = ctx.lipschitz(meter);
    let mut best: Option<WarmStart> = None;
    let mut consider = |support: SupportSet, meter: &mut Meter| {
        let (_, rss) = ctx.gram.solve_subset(support.indices());
        meter.charge(GramCache::solve_cost(support.len()));
        let better = match &best {
            None => true,
            Some(b) => rss < b.rss || (rss == b.rss && support < b.support),
        };
        if better {
            best = Some(WarmStart { support, rss });
        }
    };

    let mut starts: Vec<Vec<(usize, f64)>> = Vec::new();
    for cand in &opts.candidates {
        if cand.len() > k || cand.check_within(p).is_err() {
            return Err(invalid(format!("warm-start candidate {cand} infeasible for k = {k}")));
        }
        consider(cand.clone(), meter);
        starts.push(ls_coefficients(&ctx.gram, cand));
    }
    let fss = match &opts.fss_init {
        Some(s) => s.clone(),
        None if k < n => {
            let trace = forward_stepwise(ctx.dataset, k)?;
            meter.charge(trace.work);
            trace.steps[k - 1].active.clone()
        }
        None => SupportSet::empty(),
    };
    if !fss.is_empty() {
        consider(fss.clone(), meter);
        starts.push(ls_coefficients(&ctx.gram, &fss));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        starts.push(hard_threshold(&z, k));
    }
    for start in starts {
        let support = iht(&ctx.gram, k, lip, start, opts, meter);
        consider(support, meter);
    }
    Ok(best.expect("at least one start"))
}

fn ls_coefficients(gram: &GramCache, support: &SupportSet) -> Vec<(usize, f64)> {
    let (beta, _) = gram.solve_subset(support.indices());
    support.indices().iter().copied().zip(beta.iter().copied()).collect()
}

/// Keeps the `k` entries of largest magnitude (ties to the lower index).
fn hard_threshold(z: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    let k = k.min(z.len());
    if k < z.len() {
        order.select_nth_unstable_by(k, |&a, &b| z[b].abs().total_cmp(&z[a].abs()).then(a.cmp(&b)));
    }
    let mut kept: Vec<(usize, f64)> = order[..k].iter().map(|&j| (j, z[j])).collect();
    kept.sort_unstable_by_key(|e| e.0);
    kept
}

fn iht(
    gram: &GramCache,
    k: usize,
    lip: f64,
    mut beta: Vec<(usize, f64)>,
    opts: &WarmStartOptions,
    meter: &mut Meter,
) -> SupportSet {
    let p = gram.p;
    let mut z = vec![0.0; p];
    let mut stable = 0;
    for _ in 0..opts.max_iter {
        // z = β - (2/L)(Gβ - Xᵀy)
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = 2.0 * gram.xty[j] / lip;
        }
        for &(i, b) in &beta {
            let col = gram.gram.column(i);
            let s = 2.0 * b / lip;
            for (zj, g) in z.iter_mut().zip(col.iter()) {
                *zj -= s * g;
            }
        }
        for &(i, b) in &beta {
            z[i] += b;
        }
        meter.charge((2 * p * (beta.len() + 2)) as u64);
        let next = hard_threshold(&z, k);
        let same = next.len() == beta.len() && next.iter().zip(&beta).all(|(a, b)| a.0 == b.0);
        beta = next;
        if same {
            stable += 1;
            if stable >= opts.stable_iters {
                break;
            }
        } else {
            stable = 0;
        }
    }
    SupportSet::new(beta.into_iter().filter(|e| e.1 != 0.0).map(|e| e.0))
}
