use std::f64::consts::LN_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, svd_sorted, symmetrize};
use crate::spd::{orthonormal_basis, SpdPoint, SymTangent};

/// Relative spectral gap (α_k − α_{k+1})/α₁ below which a subgradient is
/// reported as inexact.
pub const GAP_TOL: f64 = 1e-10;

/// Solves p^{1/2} X + X p^{1/2} = E for symmetric X, i.e. X = D(p^{1/2})[E].
///
/// In the eigenbasis p = Q Λ Qᵀ this is X'_{ab} = E'_{ab} / (√λ_a + √λ_b).
pub fn solve_sqrt_sylvester(p: &SpdPoint, e: &DMatrix<f64>) -> DMatrix<f64> {
    let q = p.eigenvectors();
    let roots = p.eigenvalues().map(f64::sqrt);
    let mut rotated = q.transpose() * e * q;
    let n = roots.len();
    for a in 0..n {
        for b in 0..n {
            rotated[(a, b)] /= roots[a] + roots[b];
        }
    }
    symmetrize(&(q * rotated * q.transpose()))
}

/// Riemannian gradient of p ↦ Σ_{i≤k} log₂ αᵢ(p^{1/2} A p^{−1/2}) at p,
/// together with the spectral gap α_k − α_{k+1} of ζ = p^{1/2} A p^{−1/2}.
///
/// Steps: an orthonormal basis {eᵢ} of the tangent space at p; Xᵢ = D(p^{1/2})[eᵢ]
/// from a Sylvester equation; Zᵢ = Dζ(p)eᵢ = XᵢAp^{−1/2} − ζXᵢp^{−1/2}; the SVD
/// ζ = U diag(α) Vᵀ; S = (1/ln 2) Σ_{i≤k} uᵢvᵢᵀ/αᵢ; and v = Σᵢ tr(SᵀZᵢ) eᵢ.
///
/// The gradient is exact when the gap is positive. By convention k = 0 yields
/// the zero tangent with gap +∞ and k = n reports the gap as αₙ.
pub fn subgrad_spd(p: &SpdPoint, a: &DMatrix<f64>, k: usize) -> Result<(SymTangent, f64)> {
    let n = p.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Ok((SymTangent::zeros(n), f64::INFINITY));
    }
    let ps = p.sqrt();
    let pis = p.inv_sqrt();
    let zeta = &ps * a * &pis;
    let (u, alphas, v) = svd_sorted(&zeta);
    if !(alphas[n - 1] > 0.0) {
        return Err(Error::NumericalDomain("singular matrix in subgradient".into()));
    }
    let gap = alphas[k - 1] - if k < n { alphas[k] } else { 0.0 };

    let mut s = DMatrix::zeros(n, n);
    for (i, al) in alphas.iter().enumerate().take(k) {
        s += u.column(i) * v.column(i).transpose() / *al;
    }
    s /= LN_2;

    let a_pis = a * &pis;
    let mut grad = DMatrix::zeros(n, n);
    for e in orthonormal_basis(p) {
        let x = solve_sqrt_sylvester(p, e.mat());
        let z = &x * &a_pis - &zeta * &x * &pis;
        let coeff = s.dot(&z);
        grad += e.mat() * coeff;
    }
    Ok((SymTangent::from_symmetrized(&grad), gap))
}

/// Bound on ‖s₂(x) − s₂(y)‖_p for the subgradients computed at Jacobians
/// A(x) and A(y):
///
/// √(2n(n+1))/ln 2 · (1/δ) · ‖p^{1/2}‖_F ‖p^{−1/2}‖_F ‖A(x) − A(y)‖_F,
///
/// with δ = α_k(ζ_y(p)) − α_{k+1}(ζ_x(p)), which must be positive.
pub fn wedin_error_bound(p: &SpdPoint, a_x: &DMatrix<f64>, a_y: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = p.dim();
    if !(1..n).contains(&k) {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..{n}")));
    }
    let ps = p.sqrt();
    let pis = p.inv_sqrt();
    let sv_x = singular_values(&(&ps * a_x * &pis));
    let sv_y = singular_values(&(&ps * a_y * &pis));
    let delta = sv_y[k - 1] - sv_x[k];
    if !(delta > 0.0) {
        return Err(Error::GapViolation(delta));
    }
    let nf = n as f64;
    Ok((2.0 * nf * (nf + 1.0)).sqrt() / LN_2 / delta * ps.norm() * pis.norm() * (a_x - a_y).norm())
}
