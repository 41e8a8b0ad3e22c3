//! Elastic net and Lasso by cyclic coordinate descent.
//!
//! Objective (no 1/(2n) normalization):
//!
//! ```text
//! ||y - Xβ||² + αλ||β||₁ + (1 - α)λ||β||²
//! ```
//!
//! Coordinate update: `βⱼ ← S(xⱼᵀrⱼ, αλ/2) / (xⱼᵀxⱼ + (1 - α)λ)` where `rⱼ`
//! is the partial residual without coordinate `j`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::model::{CoefficientVector, Dataset, SupportSet, SUPPORT_TOL};

pub const CD_TOL: f64 = 1e-7;
pub const CD_MAX_SWEEPS: usize = 10_000;

/// λ_min / λ_max when p <= n.
pub const LAMBDA_RATIO_LOW_DIM: f64 = 1e-4;
/// λ_min / λ_max when p > n.
pub const LAMBDA_RATIO_HIGH_DIM: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Record the objective after every sweep.
    pub trace_objective: bool,
}

impl Default for CdOptions {
    fn default() -> Self {
        CdOptions {
            tol: CD_TOL,
            max_sweeps: CD_MAX_SWEEPS,
            trace_objective: false,
        }
    }
}

/// Outcome of one coordinate-descent solve. `converged == false` is the
/// no-convergence flag: the coefficients are the last iterate.
#[derive(Debug, Clone)]
pub struct CdSolution {
    pub coefficients: CoefficientVector,
    pub sweeps: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub work: u64,
}

pub fn enet_objective(dataset: &Dataset, alpha: f64, lambda: f64, beta: &DVector<f64>) -> f64 {
    let r = dataset.y() - dataset.x() * beta;
    r.norm_squared() + alpha * lambda * beta.lp_norm(1) + (1.0 - alpha) * lambda * beta.norm_squared()
}

fn check_penalty(alpha: f64, lambda: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Inner products `Xᵀr` are either recomputed from the residual (n per
/// coordinate, used when p >= n) or kept up to date through the Gram matrix
/// (p per coefficient change, used when n > p).
enum Mode {
    Residual(DVector<f64>),
    Covariance { gram: DMatrix<f64>, grad: Vec<f64> },
}

struct Solver<'a> {
    dataset: &'a Dataset,
    col_sq: Vec<f64>,
    threshold: f64,
    ridge: f64,
    beta: DVector<f64>,
    mode: Mode,
    work: u64,
}

impl<'a> Solver<'a> {
    fn new(dataset: &'a Dataset, init: &DVector<f64>) -> Self {
        let x = dataset.x();
        let (n, p) = x.shape();
        let resid = dataset.y() - x * init;
        let mut work = 2 * (n * p) as u64;
        let mode = if n > p {
            work += (n * p * p) as u64;
            Mode::Covariance {
                gram: x.tr_mul(x),
                grad: x.tr_mul(&resid).as_slice().to_vec(),
            }
        } else {
            Mode::Residual(resid)
        };
        Solver {
            dataset,
            col_sq: x.column_iter().map(|c| c.norm_squared()).collect(),
            threshold: 0.0,
            ridge: 0.0,
            beta: init.clone(),
            mode,
            work,
        }
    }

    fn set_penalty(&mut self, alpha: f64, lambda: f64) {
        self.threshold = alpha * lambda / 2.0;
        self.ridge = (1.0 - alpha) * lambda;
    }

    fn update(&mut self, j: usize) -> f64 {
        let col = self.dataset.x().column(j);
        let old = self.beta[j];
        let xr = match &self.mode {
            Mode::Residual(r) => {
                self.work += 2 * col.len() as u64;
                col.dot(r)
            }
            Mode::Covariance { grad, .. } => grad[j],
        };
        let z = xr + self.col_sq[j] * old;
        let new = soft_threshold(z, self.threshold) / (self.col_sq[j] + self.ridge);
        if new != old {
            let delta = new - old;
            match &mut self.mode {
                Mode::Residual(r) => {
                    r.axpy(-delta, &col, 1.0);
                    self.work += 2 * col.len() as u64;
                }
                Mode::Covariance { gram, grad } => {
                    for (g, c) in grad.iter_mut().zip(gram.column(j).iter()) {
                        *g -= delta * c;
                    }
                    self.work += 2 * grad.len() as u64;
                }
            }
            self.beta[j] = new;
        }
        self.work += 4;
        (new - old).abs()
    }

    fn sweep(&mut self, coords: &[usize]) -> f64 {
        coords.iter().fold(0.0, |acc: f64, &j| acc.max(self.update(j)))
    }

    fn active(&self) -> Vec<usize> {
        (0..self.beta.len()).filter(|&j| self.beta[j] != 0.0).collect()
    }

    /// Cyclic coordinate descent with an active-set inner loop: full sweep,
    /// then sweeps over the nonzero coordinates until they settle, then
    /// another full sweep; converged once a full sweep moves no coefficient
    /// by `tol` or more. Returns (sweeps, converged, objective trace).
    fn solve(&mut self, alpha: f64, lambda: f64, opts: &CdOptions) -> (usize, bool, Vec<f64>) {
        self.set_penalty(alpha, lambda);
        let all: Vec<usize> = (0..self.beta.len()).collect();
        let mut trace = Vec::new();
        let mut sweeps = 0;
        let mut converged = false;
        let dataset = self.dataset;
        let record = |s: &Solver, trace: &mut Vec<f64>| {
            if opts.trace_objective {
                trace.push(enet_objective(dataset, alpha, lambda, &s.beta));
            }
        };
        record(self, &mut trace);

        'outer: while sweeps < opts.max_sweeps {
            let change = self.sweep(&all);
            sweeps += 1;
            record(self, &mut trace);
            if change < opts.tol {
                converged = true;
                break;
            }
            loop {
                if sweeps >= opts.max_sweeps {
                    break 'outer;
                }
                let active = self.active();
                let change = self.sweep(&active);
                sweeps += 1;
                record(self, &mut trace);
                if change < opts.tol {
                    break;
                }
            }
        }
        (sweeps, converged, trace)
    }
}

pub fn enet_coordinate_descent_with(
    dataset: &Dataset,
    alpha: f64,
    lambda: f64,
    init: &CoefficientVector,
    opts: &CdOptions,
) -> Result<CdSolution> {
    check_penalty(alpha, lambda)?;
    if init.len() != dataset.p() {
        return Err(invalid(format!("init has length {} but p = {}", init.len(), dataset.p())));
    }
    let mut s = Solver::new(dataset, init.values());
    let (sweeps, converged, objective_trace) = s.solve(alpha, lambda, opts);
    Ok(CdSolution {
        coefficients: CoefficientVector::from(s.beta),
        sweeps,
        converged,
        objective_trace,
        work: s.work,
    })
}

pub fn enet_coordinate_descent(
    dataset: &Dataset,
    alpha: f64,
    lambda: f64,
    init: &CoefficientVector,
    tol: f64,
    max_iter: usize,
) -> Result<CdSolution> {
    enet_coordinate_descent_with(
        dataset,
        alpha,
        lambda,
        init,
        &CdOptions {
            tol,
            max_sweeps: max_iter,
            trace_objective: false,
        },
    )
}

/// Smallest λ with an all-zero solution: `(2/α)·maxⱼ|xⱼᵀy|`.
pub fn lambda_max(dataset: &Dataset, alpha: f64) -> f64 {
    let xty = dataset.x().tr_mul(dataset.y());
    2.0 / alpha * xty.amax()
}

/// `g` log-spaced values from λ_max down to ε·λ_max, strictly decreasing.
pub fn lambda_grid(dataset: &Dataset, alpha: f64, g: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if g < 2 {
        return Err(invalid(format!("grid size {g} must be at least 2")));
    }
    let top = lambda_max(dataset, alpha);
    if !(top > 0.0) || !top.is_finite() {
        return Err(invalid("response is orthogonal to every column; lambda_max = 0"));
    }
    let ratio = if dataset.p() > dataset.n() {
        LAMBDA_RATIO_HIGH_DIM
    } else {
        LAMBDA_RATIO_LOW_DIM
    };
    let (hi, lo) = (top.ln(), (top * ratio).ln());
    Ok((0..g)
        .map(|i| match i {
            0 => top,
            _ => (hi + (lo - hi) * i as f64 / (g - 1) as f64).exp(),
        })
        .collect())
}

/// Solutions along a descending λ grid for one α.
#[derive(Debug, Clone)]
pub struct RegularizationPath {
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    /// Nonzero `(index, value)` pairs per grid point (sparse rows of the
    /// G × p coefficient matrix).
    pub coefficients: Vec<Vec<(usize, f64)>>,
    pub supports: Vec<SupportSet>,
    pub converged: Vec<bool>,
    pub p: usize,
    pub work: u64,
}

impl RegularizationPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn coefficient_vector(&self, g: usize) -> CoefficientVector {
        let mut v = vec![0.0; self.p];
        for &(j, b) in &self.coefficients[g] {
            v[j] = b;
        }
        CoefficientVector::from_vec(v)
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Warm-started path over [`lambda_grid`]; the Lasso path is `alpha = 1`.
pub fn enet_path(dataset: &Dataset, alpha: f64, g: usize) -> Result<RegularizationPath> {
    enet_path_with(dataset, alpha, g, &CdOptions::default())
}

pub fn enet_path_with(dataset: &Dataset, alpha: f64, g: usize, opts: &CdOptions) -> Result<RegularizationPath> {
    let lambdas = lambda_grid(dataset, alpha, g)?;
    let p = dataset.p();
    let mut coefficients = Vec::with_capacity(g);
    let mut supports = Vec::with_capacity(g);
    let mut converged = Vec::with_capacity(g);
    check_penalty(alpha, lambdas[g - 1])?;
    // each grid point starts from the previous solution
    let mut solver = Solver::new(dataset, &DVector::zeros(p));
    for &lambda in &lambdas {
        let (_, ok, _) = solver.solve(alpha, lambda, opts);
        let beta = &solver.beta;
        let support = SupportSet::new((0..p).filter(|&j| beta[j].abs() > SUPPORT_TOL));
        coefficients.push(support.indices().iter().map(|&j| (j, beta[j])).collect::<Vec<_>>());
        supports.push(support);
        converged.push(ok);
    }
    let work = solver.work;
    Ok(RegularizationPath {
        alpha,
        lambdas,
        coefficients,
        supports,
        converged,
        p,
        work,
    })
}

pub fn lasso_path(dataset: &Dataset, g: usize) -> Result<RegularizationPath> {
    enet_path(dataset, 1.0, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{standardize_columns, Provenance};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn dataset_from(x: DMatrix<f64>, y: DVector<f64>) -> Dataset {
        Dataset::new(x, y, SupportSet::empty(), 1.0, Provenance::External("t".into())).unwrap()
    }

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let x = standardize_columns(&raw).unwrap().x;
        let mut beta = DVector::zeros(p);
        for j in 0..p.min(3) {
            beta[j] = 1.0;
        }
        let y = &x * beta + DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        dataset_from(x, y)
    }

    #[test]
    fn single_column_closed_form() {
        let d0 = random_dataset(40, 1, 1);
        let n = 40.0;
        let b = d0.x().column(0).dot(d0.y()) / n;
        for lambda in [0.5, 3.0, 20.0, 1e3] {
            let sol = enet_coordinate_descent(&d0, 1.0, lambda, &CoefficientVector::zeros(1), 1e-12, 100).unwrap();
            let expected = b.signum() * (b.abs() - lambda / (2.0 * n)).max(0.0);
            assert!((sol.coefficients[0] - expected).abs() < 1e-12, "lambda {lambda}");
        }
    }

    #[test]
    fn lambda_grid_scaling() {
        let x = DMatrix::from_column_slice(4, 2, &[1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![0.5, -2.0, 1.0, 0.5]);
        let d = dataset_from(x, y);
        let m = d.x().tr_mul(d.y()).amax();
        let grid = lambda_grid(&d, 1.0, 1000).unwrap();
        assert_eq!(grid.len(), 1000);
        assert!((grid[0] - 2.0 * m).abs() < 1e-12);
        assert!(grid.windows(2).all(|w| w[1] < w[0]));
        let half = lambda_grid(&d, 0.5, 10).unwrap();
        assert!((half[0] - 4.0 * m).abs() < 1e-12);
        let sol = enet_coordinate_descent(&d, 1.0, grid[0], &CoefficientVector::zeros(2), 1e-7, 100).unwrap();
        assert!(sol.coefficients.support().is_empty());
    }

    #[test]
    fn lambda_max_for_known_correlation() {
        // orthonormal-direction toy with max |x'y| = 5
        let x = DMatrix::from_column_slice(4, 2, &[1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![1.25, -1.25, 1.25, -1.25]);
        let d = dataset_from(x, y);
        assert!((d.x().column(0).dot(d.y()) - 5.0).abs() < 1e-15);
        assert!((lambda_max(&d, 1.0) - 10.0).abs() < 1e-12);
        assert!((lambda_max(&d, 0.5) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..5 {
            let d = random_dataset(30, 12, seed);
            let opts = CdOptions {
                trace_objective: true,
                ..CdOptions::default()
            };
            let lam = lambda_max(&d, 0.3) * 0.05;
            let sol = enet_coordinate_descent_with(&d, 0.3, lam, &CoefficientVector::zeros(12), &opts).unwrap();
            assert!(sol.converged);
            for w in sol.objective_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        let d = random_dataset(50, 20, 9);
        let path = enet_path(&d, 0.5, 50).unwrap();
        for g in [10, 25, 49] {
            let cold = enet_coordinate_descent(&d, 0.5, path.lambdas[g], &CoefficientVector::zeros(20), CD_TOL, CD_MAX_SWEEPS)
                .unwrap();
            let warm = path.coefficient_vector(g);
            for j in 0..20 {
                assert!((cold.coefficients[j] - warm[j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn path_starts_empty() {
        let d = random_dataset(25, 40, 4);
        let path = lasso_path(&d, 100).unwrap();
        assert!(path.supports[0].is_empty());
        assert!(path.supports.iter().all(|s| s.len() <= 25));
        assert!(path.supports.last().unwrap().len() > 3);
    }

    #[test]
    fn rejects_bad_penalties() {
        let d = random_dataset(10, 2, 0);
        let z = CoefficientVector::zeros(2);
        assert!(enet_coordinate_descent(&d, 0.0, 1.0, &z, 1e-7, 10).is_err());
        assert!(enet_coordinate_descent(&d, 0.5, 0.0, &z, 1e-7, 10).is_err());
        assert!(lambda_grid(&d, 1.0, 1).is_err());
    }

    #[test]
    fn sweep_limit_flags_no_convergence() {
        let d = random_dataset(30, 15, 2);
        let lam = lambda_max(&d, 1.0) * 1e-4;
        let sol = enet_coordinate_descent(&d, 1.0, lam, &CoefficientVector::zeros(15), 1e-15, 2).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.sweeps, 2);
    }
}
