//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_RTOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `n x k` matrix whose columns are the given vectors.
pub fn column_matrix<V: AsRef<[f64]>>(dim: usize, columns: &[V]) -> DMatrix<f64> {
    DMatrix::from_fn(dim, columns.len(), |i, j| columns[j].as_ref()[i])
}

/// Numerical rank of the column set, using the relative threshold [`RANK_RTOL`].
pub fn rank<V: AsRef<[f64]>>(dim: usize, columns: &[V]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let sv = column_matrix(dim, columns).singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}

/// Moore-Penrose pseudoinverse with the relative rank threshold.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    svd.pseudo_inverse(RANK_RTOL * smax)
        .expect("threshold is non-negative and both factors were computed")
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}
