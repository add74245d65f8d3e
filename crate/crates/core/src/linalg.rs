//! Small dense matrix helpers shared by the geometry and objective code.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`; the matrices involved are
//! tiny (n between 2 and 10), so eigendecompositions are used for all matrix
//! functions.

use nalgebra::{DMatrix, DVector};

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative asymmetry ‖M − Mᵀ‖_F / ‖M‖_F (0 for the zero matrix).
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Q diag(f(λ)) Qᵀ, symmetrized.
pub fn spectral_apply(
    values: &DVector<f64>,
    vectors: &DMatrix<f64>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let fj = f(values[j]);
        scaled.column_mut(j).scale_mut(fj);
    }
    symmetrize(&(scaled * vectors.transpose()))
}

/// Matrix function of a symmetric matrix via its eigendecomposition.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(m);
    spectral_apply(&values, &vectors, f)
}

/// Singular values of a 2×2 matrix `[[a, b], [c, d]]` in descending order.
///
/// Uses σ₁² = (T + √((T − 2|det|)(T + 2|det|)))/2 with T = ‖M‖_F², and
/// σ₂ = |det|/σ₁, which keeps full relative accuracy in σ₂.
#[inline]
pub fn singular_values_2x2(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let t = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = ((t - 2.0 * det) * (t + 2.0 * det)).max(0.0);
    let s1 = ((t + disc.sqrt()) * 0.5).sqrt();
    if s1 == 0.0 {
        return (0.0, 0.0);
    }
    (s1, det / s1)
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 2 && m.ncols() == 2 {
        let (s1, s2) = singular_values_2x2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        return vec![s1, s2];
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Full SVD `m = U diag(σ) Vᵀ` with σ descending.
pub fn svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut u_sorted = DMatrix::zeros(n, order.len());
    let mut v_sorted = DMatrix::zeros(m.ncols(), order.len());
    let mut sigma = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v_t.row(src).transpose());
        sigma.push(svd.singular_values[src]);
    }
    (u_sorted, sigma, v_sorted)
}
