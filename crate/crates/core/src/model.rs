//! Shared data model: datasets, coefficient vectors, supports and selection
//! results, plus column standardization.
//!
//! Column indices are 0-based inside the crate. Everything that leaves the
//! crate (CSV files, `Display` output, error messages) is 1-based.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Magnitude above which a coefficient counts as selected.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Tolerance used when checking the standardization invariants of a [`Dataset`].
pub const STANDARDIZATION_TOL: f64 = 1e-10;

/// Sorted, duplicate-free set of 0-based column indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SupportSet(v)
    }

    pub fn empty() -> Self {
        SupportSet(Vec::new())
    }

    /// Builds a support from 1-based indices, rejecting 0 and anything above `p`.
    pub fn from_one_based(indices: &[usize], p: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j == 0 || j > p) {
            return Err(invalid(format!("index {bad} outside 1..={p}")));
        }
        Ok(SupportSet::new(indices.iter().map(|j| j - 1)))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|j| j + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        let (mut a, mut b, mut count) = (0, 0, 0);
        while a < self.0.len() && b < other.0.len() {
            match self.0[a].cmp(&other.0[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
        count
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.intersection_len(other) == self.len()
    }

    pub fn check_within(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&j) if j >= p => Err(invalid(format!("support index {} exceeds p = {p}", j + 1))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", j + 1)?;
        }
        f.write_str("}")
    }
}

/// Coefficient vector of length p.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(DVector<f64>);

impl CoefficientVector {
    pub fn zeros(p: usize) -> Self {
        CoefficientVector(DVector::zeros(p))
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        CoefficientVector(DVector::from_vec(values))
    }

    /// Dense vector of length `p` with `values[i]` placed at `support[i]`.
    pub fn from_support(p: usize, support: &SupportSet, values: &[f64]) -> Self {
        let mut beta = DVector::zeros(p);
        for (&j, &v) in support.indices().iter().zip(values) {
            beta[j] = v;
        }
        CoefficientVector(beta)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> SupportSet {
        support_of(self, SUPPORT_TOL)
    }
}

impl From<DVector<f64>> for CoefficientVector {
    fn from(v: DVector<f64>) -> Self {
        CoefficientVector(v)
    }
}

impl std::ops::Index<usize> for CoefficientVector {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Indices `j` with `|beta[j]| > tol`.
pub fn support_of(beta: &CoefficientVector, tol: f64) -> SupportSet {
    SupportSet(
        beta.0
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > tol)
            .map(|(j, _)| j)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bss,
    Fss,
    Lasso,
    Enet,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bss, Method::Fss, Method::Lasso, Method::Enet];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bss => "BSS",
            Method::Fss => "FSS",
            Method::Lasso => "LASSO",
            Method::Enet => "ENET",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BSS" => Ok(Method::Bss),
            "FSS" => Ok(Method::Fss),
            "LASSO" => Ok(Method::Lasso),
            "ENET" => Ok(Method::Enet),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Tuning values behind one selected model: a subset size for BSS/FSS, an
/// `(alpha, lambda)` pair for Lasso/Enet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuningRecord {
    SubsetSize(usize),
    Penalty { alpha: f64, lambda: f64 },
}

impl TuningRecord {
    pub fn subset_size(&self) -> Option<usize> {
        match *self {
            TuningRecord::SubsetSize(k) => Some(k),
            TuningRecord::Penalty { .. } => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            TuningRecord::Penalty { alpha, .. } => Some(alpha),
            TuningRecord::SubsetSize(_) => None,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            TuningRecord::Penalty { lambda, .. } => Some(lambda),
            TuningRecord::SubsetSize(_) => None,
        }
    }

    /// Tie-break order: subset sizes ascending, then alpha ascending, then
    /// lambda descending (larger penalties first).
    pub fn tie_order(&self, other: &TuningRecord) -> std::cmp::Ordering {
        use TuningRecord::*;
        match (self, other) {
            (SubsetSize(a), SubsetSize(b)) => a.cmp(b),
            (SubsetSize(_), Penalty { .. }) => std::cmp::Ordering::Less,
            (Penalty { .. }, SubsetSize(_)) => std::cmp::Ordering::Greater,
            (Penalty { alpha: a1, lambda: l1 }, Penalty { alpha: a2, lambda: l2 }) => {
                a1.total_cmp(a2).then(l2.total_cmp(l1))
            }
        }
    }
}

/// One method's selected model.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: Method,
    pub support: SupportSet,
    pub coefficients: CoefficientVector,
    pub tuning: TuningRecord,
    /// Always true except for BSS runs stopped by their budget.
    pub certified: bool,
    pub optimality_gap: f64,
    pub runtime_ms: u64,
}

impl SelectionResult {
    /// Result whose support is the nonzero pattern of `coefficients`.
    pub fn new(method: Method, coefficients: CoefficientVector, tuning: TuningRecord) -> Self {
        SelectionResult {
            method,
            support: coefficients.support(),
            coefficients,
            tuning,
            certified: true,
            optimality_gap: 0.0,
            runtime_ms: 0,
        }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Synthetic {
        scenario_id: String,
        seed: u64,
    },
    SemiSynthetic {
        scenario_id: String,
        seed: u64,
        /// 0-based rows of the source expression matrix, ascending.
        rows: Vec<usize>,
        /// Source column ids of the dataset columns, in dataset order.
        column_ids: Vec<String>,
    },
    External(String),
}

/// Standardized design matrix with response and generating truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    true_support: SupportSet,
    sigma2: f64,
    meta: Provenance,
}

impl Dataset {
    /// Validates shapes, standardization of `x` and the support range.
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        true_support: SupportSet,
        sigma2: f64,
        meta: Provenance,
    ) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(invalid(format!("y has length {} but x has {n} rows", y.len())));
        }
        if sigma2 < 0.0 || !sigma2.is_finite() {
            return Err(invalid(format!("noise variance {sigma2} must be finite and >= 0")));
        }
        true_support.check_within(p)?;
        for j in 0..p {
            let col = x.column(j);
            let mean = col.sum() / n as f64;
            let ms = col.norm_squared() / n as f64;
            if mean.abs() >= STANDARDIZATION_TOL || (ms - 1.0).abs() >= STANDARDIZATION_TOL {
                return Err(invalid(format!(
                    "column {} is not standardized (mean {mean:e}, mean square {ms})",
                    j + 1
                )));
            }
        }
        Ok(Dataset {
            x,
            y,
            true_support,
            sigma2,
            meta,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn true_support(&self) -> &SupportSet {
        &self.true_support
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn meta(&self) -> &Provenance {
        &self.meta
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn s(&self) -> usize {
        self.true_support.len()
    }
}

/// Output of [`standardize_columns`].
#[derive(Debug, Clone)]
pub struct Standardized {
    pub x: DMatrix<f64>,
    pub centers: DVector<f64>,
    pub scales: DVector<f64>,
}

/// Centers every column and scales it to `n⁻¹ Σ x² = 1` (population scale).
pub fn standardize_columns(x_raw: &DMatrix<f64>) -> Result<Standardized> {
    let (n, p) = x_raw.shape();
    if n < 2 {
        return Err(invalid(format!("standardization needs n >= 2, got {n}")));
    }
    let mut x = x_raw.clone();
    let mut centers = DVector::zeros(p);
    let mut scales = DVector::zeros(p);
    for j in 0..p {
        let mut col = x.column_mut(j);
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let scale = (col.norm_squared() / n as f64).sqrt();
        let magnitude = x_raw.column(j).amax().max(f64::MIN_POSITIVE);
        if scale <= 1e-13 * magnitude || !scale.is_finite() {
            return Err(Error::ConstantColumn(j + 1));
        }
        col /= scale;
        centers[j] = mean;
        scales[j] = scale;
    }
    Ok(Standardized { x, centers, scales })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn standardizes_small_column() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let st = standardize_columns(&x).unwrap();
        let r = 1.5f64.sqrt();
        assert_abs_diff_eq!(st.centers[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.scales[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        for (got, want) in st.x.column(0).iter().zip([-r, 0.0, r]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let col = st.x.column(0);
        assert_abs_diff_eq!(col.sum() / 3.0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(col.norm_squared() / 3.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 4.0, 5.0, 5.0, 5.0]);
        assert!(matches!(standardize_columns(&x), Err(Error::ConstantColumn(2))));
    }

    #[test]
    fn support_examples() {
        let b = CoefficientVector::from_vec(vec![0.0, 1.5, 0.0, -0.2]);
        assert_eq!(support_of(&b, 1e-9).one_based(), vec![2, 4]);
        assert!(support_of(&CoefficientVector::zeros(5), 1e-9).is_empty());
        let b = CoefficientVector::from_vec(vec![1e-12, 1.0]);
        assert_eq!(support_of(&b, 1e-9).one_based(), vec![2]);
    }

    #[test]
    fn one_based_round_trip_and_display() {
        let s = SupportSet::from_one_based(&[5, 1, 5], 6).unwrap();
        assert_eq!(s.indices(), &[0, 4]);
        assert_eq!(s.to_string(), "{1, 5}");
        assert!(SupportSet::from_one_based(&[0], 3).is_err());
        assert!(SupportSet::from_one_based(&[4], 3).is_err());
    }

    #[test]
    fn dataset_rejects_unstandardized_columns() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 0.0]);
        let res = Dataset::new(x, y, SupportSet::empty(), 1.0, Provenance::External("t".into()));
        assert!(res.is_err());
    }

    proptest! {
        #[test]
        fn standardization_is_idempotent(
            vals in proptest::collection::vec(-50.0f64..50.0, 24),
        ) {
            let x = DMatrix::from_column_slice(8, 3, &vals);
            prop_assume!(standardize_columns(&x).is_ok());
            let once = standardize_columns(&x).unwrap();
            let twice = standardize_columns(&once.x).unwrap();
            for (a, b) in once.x.iter().zip(twice.x.iter()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            for j in 0..3 {
                prop_assert!(twice.centers[j].abs() < 1e-10);
                prop_assert!((twice.scales[j] - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn zero_tolerance_support_contains_thresholded_support(
            vals in proptest::collection::vec(-1.0f64..1.0, 1..30),
            tol in 0.0f64..0.5,
        ) {
            let b = CoefficientVector::from_vec(vals);
            let loose = support_of(&b, 0.0);
            let strict = support_of(&b, tol);
            prop_assert!(strict.is_subset_of(&loose));
        }
    }
}
