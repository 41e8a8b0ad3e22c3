//! Exact best subset selection by depth-first branch-and-bound.
//!
//! A node fixes some variables in and some out; the rest are free. Its lower
//! bound is the RSS of unconstrained least squares on every variable not
//! forced out, tightened by the cost of the drops the cardinality constraint
//! still forces (see [`Relaxation::bound`]). Relaxations are carried down the
//! tree: an "in" child shares its parent's, an "out" child obtains its own by
//! a rank-one downdate of the parent's inverse Gram matrix.

use std::rc::Rc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::context::BssContext;
use super::BssSolution;
use crate::error::{invalid, Result};
use crate::model::SupportSet;
use crate::selectors::gram::GramCache;
use crate::selectors::least_squares::least_squares_on_support;
use crate::work::{BudgetClock, Meter};

/// Relative slack when pruning against the incumbent.
pub const PRUNE_TOL: f64 = 1e-9;
/// Relative gap at or below which a solution counts as certified.
pub const GAP_TOL: f64 = 1e-9;
/// Downdates after which a relaxation is refactored from scratch.
const REFRESH_AGE: u32 = 32;
/// Relaxations over more variables than this are skipped (bound inherited).
pub const MAX_RELAX_DIM: usize = 320;

/// Solves with the given budget, metering on a fresh meter.
pub fn bss_branch_and_bound(
    dataset: &crate::model::Dataset,
    k: usize,
    time_budget_ms: u64,
    warm: &SupportSet,
) -> Result<BssSolution> {
    let ctx = BssContext::new(dataset);
    let mut meter = Meter::new(BudgetClock::default());
    branch_and_bound_with(&ctx, k, warm, &[time_budget_ms], &mut meter).map(|mut v| v.remove(0))
}

/// Runs the search once, reporting the state at every budget in `limits`
/// (ascending). The report for a limit is exactly what a separate run with
/// that limit and the same meter history would return.
pub fn branch_and_bound_with(
    ctx: &BssContext,
    k: usize,
    warm: &SupportSet,
    limits: &[u64],
    meter: &mut Meter,
) -> Result<Vec<BssSolution>> {
    let (n, p) = (ctx.gram.n, ctx.gram.p);
    if k == 0 || k > n.min(p) {
        return Err(invalid(format!("k = {k} must lie in 1..={}", n.min(p))));
    }
    if limits.is_empty() || limits[0] == 0 || limits.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("time budgets must be positive and ascending"));
    }
    if warm.len() > k || warm.check_within(p).is_err() {
        return Err(invalid(format!("warm start {warm} infeasible for k = {k}")));
    }
    let mut search = Search::new(ctx, k, meter);
    search.offer(warm.indices().to_vec(), None);

    let mut out = Vec::with_capacity(limits.len());
    let mut next = 0;
    loop {
        while next < limits.len() && search.meter.exhausted(limits[next]) {
            out.push(search.snapshot(false));
            next += 1;
        }
        if next == limits.len() {
            break;
        }
        let Some(node) = search.stack.pop() else { break };
        search.process(node);
    }
    while out.len() < limits.len() {
        out.push(search.snapshot(true));
    }
    Ok(out)
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(p: usize) -> Self {
        Bits(vec![0; p.div_ceil(64)])
    }
    fn get(&self, j: usize) -> bool {
        self.0[j / 64] >> (j % 64) & 1 == 1
    }
    fn with(&self, j: usize) -> Self {
        let mut b = self.clone();
        b.0[j / 64] |= 1 << (j % 64);
        b
    }
}

/// Least squares on the variable set `idx` (sorted), with the inverse Gram
/// matrix kept for downdates.
struct Relaxation {
    idx: Vec<usize>,
    /// Column-major `m × m` inverse of the Gram submatrix.
    inv: Vec<f64>,
    beta: Vec<f64>,
    rss: f64,
    /// Lower bound on the smallest eigenvalue of the Gram submatrix.
    lam_min: f64,
    age: u32,
}

impl Relaxation {
    fn fresh(gram: &GramCache, idx: Vec<usize>, lam_min: Option<f64>, meter: &mut Meter) -> Option<Relaxation> {
        let m = idx.len();
        let g = gram.submatrix(&idx);
        let b = gram.subvector(&idx);
        let mu = m as u64;
        meter.charge(mu * mu * mu + 4 * mu * mu);
        let lam_min = match lam_min {
            Some(l) => l,
            None => {
                meter.charge(6 * mu * mu * mu);
                let eig = SymmetricEigen::new(g.clone());
                (eig.eigenvalues.min() * (1.0 - 1e-9)).max(0.0)
            }
        };
        let chol = g.cholesky()?;
        let beta = chol.solve(&b);
        let inv: DMatrix<f64> = chol.inverse();
        if !inv.iter().all(|v| v.is_finite()) || !beta.iter().all(|v| v.is_finite()) {
            return None;
        }
        let rss = (gram.yty - b.dot(&beta)).max(0.0);
        Some(Relaxation {
            idx,
            inv: inv.as_slice().to_vec(),
            beta: beta.as_slice().to_vec(),
            rss,
            lam_min,
            age: 0,
        })
    }

    fn m(&self) -> usize {
        self.idx.len()
    }

    /// Drops variable `j`, updating the inverse by the Schur complement.
    fn drop_var(&self, j: usize, meter: &mut Meter) -> Option<Relaxation> {
        let m = self.m();
        let q = self.idx.binary_search(&j).ok()?;
        let inv = &self.inv;
        let d = inv[q * m + q];
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        meter.charge(2 * (m * m) as u64);
        let colq = &inv[q * m..(q + 1) * m];
        let mut next = Vec::with_capacity((m - 1) * (m - 1));
        for b in (0..m).filter(|&b| b != q) {
            let f = colq[b] / d;
            let col = &inv[b * m..(b + 1) * m];
            next.extend((0..m).filter(|&a| a != q).map(|a| col[a] - colq[a] * f));
        }
        let bq = self.beta[q];
        let beta = (0..m).filter(|&a| a != q).map(|a| self.beta[a] - colq[a] * bq / d).collect();
        let mut idx = self.idx.clone();
        idx.remove(q);
        Some(Relaxation {
            idx,
            inv: next,
            beta,
            rss: self.rss + bq * bq / d,
            lam_min: self.lam_min,
            age: self.age + 1,
        })
    }

    /// Lower bound for a node whose free variables are the entries of
    /// `idx` outside `in_set`, of which at most `r` may stay.
    ///
    /// Removing a set `D` of `d` free variables raises the RSS by
    /// `β_Dᵀ (G⁻¹)_DD⁻¹ β_D`. That is at least the largest single-drop
    /// increase `β_j² / (G⁻¹)_jj` over `D`, hence the `d`-th smallest single
    /// increase among the free variables; and at least
    /// `λ_min(G) ||β_D||²`, hence `λ_min` times the sum of the `d` smallest
    /// `β_j²`.
    fn bound(&self, in_set: &Bits, r: usize, scratch: &mut Vec<f64>, scratch2: &mut Vec<f64>) -> f64 {
        let m = self.m();
        scratch.clear();
        scratch2.clear();
        for (a, &j) in self.idx.iter().enumerate() {
            if !in_set.get(j) {
                let b2 = self.beta[a] * self.beta[a];
                scratch.push(b2 / self.inv[a * m + a]);
                scratch2.push(b2);
            }
        }
        let free = scratch.len();
        if free <= r {
            return self.rss;
        }
        let d = free - r;
        let (_, single, _) = scratch.select_nth_unstable_by(d - 1, f64::total_cmp);
        let single = *single;
        scratch2.select_nth_unstable_by(d - 1, f64::total_cmp);
        let sq: f64 = scratch2[..d].iter().sum();
        self.rss + single.max(self.lam_min * sq) * (1.0 - 1e-12)
    }
}

enum Source {
    Same(Rc<Relaxation>),
    Drop(Rc<Relaxation>, usize),
    Nothing,
}

struct Node {
    in_set: Bits,
    out_set: Bits,
    n_in: usize,
    n_out: usize,
    bound: f64,
    src: Source,
}

struct Search<'c, 'm, 'd> {
    ctx: &'c BssContext<'d>,
    k: usize,
    meter: &'m mut Meter,
    stack: Vec<Node>,
    inc_support: Vec<usize>,
    inc_rss: f64,
    nodes: u64,
    scratch: Vec<f64>,
    scratch2: Vec<f64>,
}

impl<'c, 'm, 'd> Search<'c, 'm, 'd> {
    fn new(ctx: &'c BssContext<'d>, k: usize, meter: &'m mut Meter) -> Self {
        let p = ctx.gram.p;
        let root = Node {
            in_set: Bits::new(p),
            out_set: Bits::new(p),
            n_in: 0,
            n_out: 0,
            bound: 0.0,
            src: Source::Nothing,
        };
        Search {
            ctx,
            k,
            meter,
            stack: vec![root],
            inc_support: Vec::new(),
            inc_rss: f64::INFINITY,
            nodes: 0,
            scratch: Vec::new(),
            scratch2: Vec::new(),
        }
    }

    /// Considers a feasible support; `rss` is computed when not given.
    fn offer(&mut self, support: Vec<usize>, rss: Option<f64>) {
        let rss = rss.unwrap_or_else(|| {
            self.meter.charge(GramCache::solve_cost(support.len()));
            self.ctx.gram.solve_subset(&support).1
        });
        if rss < self.inc_rss || (rss == self.inc_rss && support < self.inc_support) {
            self.inc_rss = rss;
            self.inc_support = support;
        }
    }

    fn prunable(&self, bound: f64) -> bool {
        bound >= self.inc_rss * (1.0 - PRUNE_TOL)
    }

    fn process(&mut self, node: Node) {
        self.nodes += 1;
        self.meter.charge(64 + self.ctx.gram.p as u64 / 8);
        if self.prunable(node.bound) {
            return;
        }
        let p = self.ctx.gram.p;
        let n = self.ctx.gram.n;
        let r = self.k - node.n_in;
        let free = p - node.n_in - node.n_out;
        if r == 0 {
            let support: Vec<usize> = (0..p).filter(|&j| node.in_set.get(j)).collect();
            self.offer(support, None);
            return;
        }
        let kept = free + node.n_in;
        let relax = if kept < n && kept <= MAX_RELAX_DIM {
            self.materialize(&node, kept)
        } else {
            None
        };
        if free <= r {
            let support: Vec<usize> = (0..p).filter(|&j| !node.out_set.get(j)).collect();
            let rss = relax.as_ref().map(|rl| rl.rss);
            self.offer(support, rss);
            return;
        }

        let (bound, branch) = match &relax {
            Some(rl) => {
                let m = rl.m() as u64;
                self.meter.charge(8 * m);
                let b = rl.bound(&node.in_set, r, &mut self.scratch, &mut self.scratch2);
                let mut best = (usize::MAX, -1.0);
                for (a, &j) in rl.idx.iter().enumerate() {
                    let v = rl.beta[a].abs();
                    if !node.in_set.get(j) && v > best.1 {
                        best = (j, v);
                    }
                }
                (node.bound.max(b), best.0)
            }
            None => (node.bound, self.correlation_branch(&node)),
        };
        if self.prunable(bound) {
            return;
        }
        let out_src = match &relax {
            Some(rl) => Source::Drop(rl.clone(), branch),
            None => Source::Nothing,
        };
        let in_src = match relax {
            Some(rl) => Source::Same(rl),
            None => Source::Nothing,
        };
        self.stack.push(Node {
            in_set: node.in_set.clone(),
            out_set: node.out_set.with(branch),
            n_in: node.n_in,
            n_out: node.n_out + 1,
            bound,
            src: out_src,
        });
        self.stack.push(Node {
            in_set: node.in_set.with(branch),
            out_set: node.out_set,
            n_in: node.n_in + 1,
            n_out: node.n_out,
            bound,
            src: in_src,
        });
    }

    fn materialize(&mut self, node: &Node, kept: usize) -> Option<Rc<Relaxation>> {
        let gram = &self.ctx.gram;
        let kept_idx = || (0..gram.p).filter(|&j| !node.out_set.get(j)).collect::<Vec<_>>();
        match &node.src {
            Source::Same(rl) => Some(rl.clone()),
            Source::Drop(rl, j) if rl.age + 1 < REFRESH_AGE => match rl.drop_var(*j, self.meter) {
                Some(next) => Some(Rc::new(next)),
                None => Relaxation::fresh(gram, kept_idx(), Some(rl.lam_min), self.meter).map(Rc::new),
            },
            Source::Drop(rl, _) => Relaxation::fresh(gram, kept_idx(), Some(rl.lam_min), self.meter).map(Rc::new),
            Source::Nothing => {
                debug_assert_eq!(kept, gram.p - node.n_out);
                Relaxation::fresh(gram, kept_idx(), None, self.meter).map(Rc::new)
            }
        }
    }

    /// Branching variable when no relaxation is available: the free variable
    /// most correlated with the residual of the forced-in fit.
    fn correlation_branch(&mut self, node: &Node) -> usize {
        let gram = &self.ctx.gram;
        let p = gram.p;
        let ins: Vec<usize> = (0..p).filter(|&j| node.in_set.get(j)).collect();
        let (beta, _) = gram.solve_subset(&ins);
        self.meter
            .charge(GramCache::solve_cost(ins.len()) + (p * (ins.len() + 2)) as u64);
        let mut best = (usize::MAX, -1.0);
        for j in 0..p {
            if node.in_set.get(j) || node.out_set.get(j) {
                continue;
            }
            let mut c = gram.xty[j];
            for (a, &i) in ins.iter().enumerate() {
                c -= gram.gram[(j, i)] * beta[a];
            }
            let score = c.abs() / gram.gram[(j, j)].sqrt();
            if score > best.1 {
                best = (j, score);
            }
        }
        best.0
    }

    fn snapshot(&self, exhausted: bool) -> BssSolution {
        let support = SupportSet::new(self.inc_support.iter().copied());
        let (coefficients, rss) = least_squares_on_support(self.ctx.dataset, &support);
        let gap = if exhausted || self.inc_rss <= 0.0 {
            0.0
        } else {
            let lower = self
                .stack
                .iter()
                .map(|nd| nd.bound)
                .fold(self.inc_rss, f64::min);
            ((self.inc_rss - lower) / self.inc_rss).max(0.0)
        };
        BssSolution {
            k: self.k,
            support,
            coefficients,
            rss,
            certified: exhausted || gap <= GAP_TOL,
            gap,
            nodes_explored: self.nodes,
            elapsed_ms: self.meter.elapsed_ms(),
            work_units: self.meter.units(),
        }
    }
}
