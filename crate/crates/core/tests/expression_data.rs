//! Checks against the real ovarian cancer expression matrix. The file is not
//! distributed with the crate; point `VARSEL_EXPRESSION_MATRIX` at a CSV
//! export (samples as rows, genes as columns) to run them.

use varsel::datagen::{build_semisynthetic, load_expression_matrix, true_predictor_mean_correlation, ExpressionMatrix};

fn matrix() -> Option<ExpressionMatrix> {
    let Ok(path) = std::env::var("VARSEL_EXPRESSION_MATRIX") else {
        eprintln!("VARSEL_EXPRESSION_MATRIX not set; skipping");
        return None;
    };
    Some(load_expression_matrix(path).expect("expression matrix"))
}

fn mean_rho(m: &ExpressionMatrix, p: usize, n: usize) -> f64 {
    let total: f64 = (0..100u64)
        .map(|seed| true_predictor_mean_correlation(&build_semisynthetic(m, p, n, 1.22, seed, "rho").unwrap()))
        .sum();
    total / 100.0
}

#[test]
fn expression_matrix_shape_and_true_predictor_correlation() {
    let Some(m) = matrix() else { return };
    assert_eq!((m.nrows(), m.ncols()), (594, 22277));
    let low = mean_rho(&m, 100, 594);
    assert!((low - 0.19).abs() <= 0.05, "low-dimensional mean |rho| {low}");
    let high = mean_rho(&m, 1000, 100);
    assert!((high - 0.37).abs() <= 0.05, "high-dimensional mean |rho| {high}");
}
