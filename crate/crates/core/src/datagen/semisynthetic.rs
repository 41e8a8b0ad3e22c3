use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ExpressionMatrix;
use crate::error::{invalid, Error, Result};
use crate::model::{standardize_columns, Dataset, Provenance, SupportSet};

/// Number of true predictors in a semi-synthetic dataset.
pub const SEMISYNTHETIC_S: usize = 10;

/// Builds a semi-synthetic dataset from a random row/column subsample.
///
/// The true predictors are the most correlated column pair (in absolute value)
/// followed by the eight columns most correlated with the first member of
/// that pair. Columns that are constant on the drawn rows are never sampled.
pub fn build_semisynthetic(
    matrix: &ExpressionMatrix,
    p_sub: usize,
    n_sub: usize,
    tau: f64,
    seed: u64,
    scenario_id: &str,
) -> Result<Dataset> {
    if p_sub < SEMISYNTHETIC_S {
        return Err(Error::InsufficientColumns {
            needed: SEMISYNTHETIC_S,
            got: p_sub,
        });
    }
    if n_sub < 2 || n_sub > matrix.nrows() {
        return Err(invalid(format!("n_sub = {n_sub} must lie in 2..={}", matrix.nrows())));
    }
    if p_sub > matrix.ncols() {
        return Err(Error::InsufficientColumns {
            needed: p_sub,
            got: matrix.ncols(),
        });
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("tau = {tau} must be positive")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = index::sample(&mut rng, matrix.nrows(), n_sub).into_vec();
    rows.sort_unstable();
    let sub_rows = matrix.values.select_rows(&rows);

    let usable: Vec<usize> = (0..matrix.ncols())
        .filter(|&j| {
            let col = sub_rows.column(j);
            let first = col[0];
            col.iter().any(|&v| v != first)
        })
        .collect();
    if usable.len() < p_sub {
        return Err(Error::InsufficientColumns {
            needed: p_sub,
            got: usable.len(),
        });
    }
    let mut cols: Vec<usize> = index::sample(&mut rng, usable.len(), p_sub)
        .into_iter()
        .map(|i| usable[i])
        .collect();
    cols.sort_unstable();

    let st = standardize_columns(&sub_rows.select_columns(&cols))?;
    let x = st.x;
    let n = n_sub as f64;
    let corr = x.transpose() * &x / n;

    let (mut first, mut second, mut best) = (0, 1, -1.0);
    for u in 0..p_sub {
        for v in (u + 1)..p_sub {
            let c = corr[(u, v)].abs();
            if c > best {
                best = c;
                first = u;
                second = v;
            }
        }
    }
    let mut others: Vec<usize> = (0..p_sub).filter(|&j| j != first && j != second).collect();
    others.sort_by(|&a, &b| corr[(first, b)].abs().total_cmp(&corr[(first, a)].abs()).then(a.cmp(&b)));
    let truth = SupportSet::new(
        [first, second]
            .into_iter()
            .chain(others.into_iter().take(SEMISYNTHETIC_S - 2)),
    );

    let mut beta = DVector::zeros(p_sub);
    for &j in truth.indices() {
        beta[j] = 1.0;
    }
    let signal = &x * &beta;
    let sigma2 = signal.norm_squared() / n / tau;
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    let sd = sigma2.sqrt();
    let y = signal + DVector::from_fn(n_sub, |_, _| { let z: f64 = StandardNormal.sample(&mut rng); sd * z });

    Dataset::new(
        x,
        y,
        truth,
        sigma2,
        Provenance::SemiSynthetic {
            scenario_id: scenario_id.to_string(),
            seed,
            rows,
            column_ids: cols.iter().map(|&j| matrix.column_ids[j].clone()).collect(),
        },
    )
}

/// Mean absolute pairwise correlation among the true predictors.
pub fn true_predictor_mean_correlation(dataset: &Dataset) -> f64 {
    let idx = dataset.true_support().indices();
    let x: DMatrix<f64> = dataset.x().select_columns(idx);
    let corr = x.transpose() * &x / dataset.n() as f64;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for u in 0..idx.len() {
        for v in (u + 1)..idx.len() {
            total += corr[(u, v)].abs();
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}
