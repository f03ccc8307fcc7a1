use nalgebra::{DMatrix, DVector};

/// Solves the dense row-major system `a x = b`; `None` when `a` is singular.
pub(crate) fn solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let lu = DMatrix::from_row_slice(n, n, a).lu();
    let x = lu.solve(&DVector::from_column_slice(b))?;
    x.iter()
        .all(|v| v.is_finite())
        .then(|| x.iter().copied().collect())
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
