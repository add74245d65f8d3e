//! Geometry of the manifold of symmetric positive-definite matrices under the
//! trace (affine-invariant) metric ⟨v, w⟩_p = tr(p⁻¹ v p⁻¹ w).
//!
//! Matrix functions are evaluated through the cached eigendecomposition of each
//! [`SpdPoint`], and every result is symmetrized to suppress round-off drift.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, spectral_apply, sym_eigen, sym_fn, symmetrize};

const SYMMETRY_TOL: f64 = 1e-12;
const SPD_EIG_TOL: f64 = 1e-13;
const DEGENERATE_PLANE_TOL: f64 = 1e-14;

/// A symmetric positive-definite matrix together with its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdPoint {
    mat: DMatrix<f64>,
    // Descending eigenvalues and matching orthonormal eigenvectors (columns).
    evals: DVector<f64>,
    evecs: DMatrix<f64>,
}

impl SpdPoint {
    /// Validates symmetry and positive definiteness. The smallest eigenvalue
    /// must exceed `1e-13 · ‖mat‖₂`.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSpd(format!("{}x{} matrix is not square", mat.nrows(), mat.ncols())));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSpd("non-finite entry".into()));
        }
        let asym = asymmetry(&mat);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let mat = symmetrize(&mat);
        let (evals, evecs) = sym_eigen(&mat);
        let n = evals.len();
        if n == 0 {
            return Err(Error::NotSpd("empty matrix".into()));
        }
        let largest = evals[0];
        let smallest = evals[n - 1];
        if largest <= 0.0 || smallest <= SPD_EIG_TOL * largest {
            return Err(Error::NotSpd(format!(
                "eigenvalue range [{smallest:e}, {largest:e}]"
            )));
        }
        Ok(Self { mat, evals, evecs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
            evals: DVector::from_element(n, 1.0),
            evecs: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_mat(self) -> DMatrix<f64> {
        self.mat
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.evals
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.evecs
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.evals[self.evals.len() - 1]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.evals[0]
    }

    /// p^θ for any real θ.
    pub fn pow(&self, theta: f64) -> DMatrix<f64> {
        spectral_apply(&self.evals, &self.evecs, |l| l.powf(theta))
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        spectral_apply(&self.evals, &self.evecs, f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        spectral_apply(&self.evals, &self.evecs, |l| 1.0 / l.sqrt())
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        spectral_apply(&self.evals, &self.evecs, |l| 1.0 / l)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.mat * c)
    }
}

/// A symmetric matrix, read as a tangent vector at some point of SPD(n).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTangent {
    mat: DMatrix<f64>,
}

impl SymTangent {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), got: mat.ncols() });
        }
        let asym = asymmetry(&mat);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { mat: symmetrize(&mat) })
    }

    /// Symmetrizes `mat` instead of rejecting it.
    pub fn from_symmetrized(mat: &DMatrix<f64>) -> Self {
        Self { mat: symmetrize(mat) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { mat: DMatrix::zeros(n, n) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self { mat: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { mat: &self.mat * c }
    }

    pub fn add(&self, other: &SymTangent) -> Self {
        Self { mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &SymTangent) -> Self {
        Self { mat: &self.mat - &other.mat }
    }
}

/// The order interval [αI, βI]: SPD matrices with spectrum inside [α, β].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrderInterval {
    alpha: f64,
    beta: f64,
}

impl OrderInterval {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < beta && beta.is_finite()) {
            return Err(Error::InvalidInterval { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn contains(&self, p: &SpdPoint) -> bool {
        p.min_eigenvalue() >= self.alpha && p.max_eigenvalue() <= self.beta
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

/// Trace-metric inner product ⟨v, w⟩_p.
pub fn inner(p: &SpdPoint, v: &SymTangent, w: &SymTangent) -> Result<f64> {
    check_dims(p.dim(), v.dim())?;
    check_dims(p.dim(), w.dim())?;
    let pinv = p.inverse();
    let lhs = &pinv * v.mat();
    let rhs = &pinv * w.mat();
    Ok((lhs * rhs).trace())
}

pub fn norm(p: &SpdPoint, v: &SymTangent) -> Result<f64> {
    Ok(inner(p, v, v)?.max(0.0).sqrt())
}

/// p^{-1/2} q p^{-1/2}, whose eigenvalues are those of p⁻¹q.
fn whitened(p: &SpdPoint, q: &SpdPoint) -> DMatrix<f64> {
    let pis = p.inv_sqrt();
    symmetrize(&(&pis * q.mat() * &pis))
}

/// Riemannian distance d(p, q) = (Σ ln² λᵢ(p⁻¹q))^{1/2}.
pub fn dist(p: &SpdPoint, q: &SpdPoint) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    let (evals, _) = sym_eigen(&whitened(p, q));
    if evals.iter().any(|&l| l <= 0.0) {
        return Err(Error::NumericalDomain("non-positive relative eigenvalue".into()));
    }
    Ok(evals.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// Point p #_θ q = p^{1/2}(p^{-1/2} q p^{-1/2})^θ p^{1/2} on the geodesic from p
/// (θ = 0) to q (θ = 1). θ outside [0, 1] extrapolates along the same geodesic.
pub fn geodesic(p: &SpdPoint, q: &SpdPoint, theta: f64) -> Result<SpdPoint> {
    check_dims(p.dim(), q.dim())?;
    let ps = p.sqrt();
    let inner_pow = sym_fn(&whitened(p, q), |l| l.powf(theta));
    SpdPoint::new(symmetrize(&(&ps * inner_pow * &ps)))
}

/// Riemannian exponential exp_p(v) = p^{1/2} exp(p^{-1/2} v p^{-1/2}) p^{1/2}.
pub fn exp_map(p: &SpdPoint, v: &SymTangent) -> Result<SpdPoint> {
    check_dims(p.dim(), v.dim())?;
    let ps = p.sqrt();
    let pis = p.inv_sqrt();
    let e = sym_fn(&(&pis * v.mat() * &pis), f64::exp);
    SpdPoint::new(symmetrize(&(&ps * e * &ps)))
}

/// Riemannian logarithm, the inverse of [`exp_map`] at p.
pub fn log_map(p: &SpdPoint, q: &SpdPoint) -> Result<SymTangent> {
    check_dims(p.dim(), q.dim())?;
    let ps = p.sqrt();
    let l = sym_fn(&whitened(p, q), f64::ln);
    Ok(SymTangent::from_symmetrized(&(&ps * l * &ps)))
}

/// Metric projection onto [αI, βI]: clip the eigenvalues of p to [α, β].
pub fn project_interval(p: &SpdPoint, iv: &OrderInterval) -> SpdPoint {
    if iv.contains(p) {
        return p.clone();
    }
    let clipped = p.evals.map(|l| l.clamp(iv.alpha, iv.beta));
    let mat = spectral_apply(&clipped, &p.evecs, |l| l);
    SpdPoint { mat, evals: clipped, evecs: p.evecs.clone() }
}

/// Diameter of [αI, βI] in dimension n: √n · ln(β/α).
pub fn interval_diameter(iv: &OrderInterval, n: usize) -> f64 {
    (n as f64).sqrt() * (iv.beta / iv.alpha).ln()
}

/// Frobenius-orthonormal basis of the symmetric n×n matrices: the diagonal
/// units E_jj followed by (E_ab + E_ba)/√2 for a < b.
pub fn frobenius_sym_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        let mut e = DMatrix::zeros(n, n);
        e[(j, j)] = 1.0;
        basis.push(e);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..n {
        for b in (a + 1)..n {
            let mut e = DMatrix::zeros(n, n);
            e[(a, b)] = h;
            e[(b, a)] = h;
            basis.push(e);
        }
    }
    basis
}

/// Orthonormal basis of (Sym(n), ⟨·,·⟩_p) given by e_i = p^{1/2} E_i p^{1/2}.
pub fn orthonormal_basis(p: &SpdPoint) -> Vec<SymTangent> {
    let ps = p.sqrt();
    frobenius_sym_basis(p.dim())
        .into_iter()
        .map(|e| SymTangent::from_symmetrized(&(&ps * e * &ps)))
        .collect()
}

/// Sectional curvature at the identity of the plane spanned by X and Y:
/// K = −½ [tr(X²Y²) − tr((XY)²)] / [tr(X²)tr(Y²) − tr(XY)²].
pub fn sectional_curvature_identity(x: &SymTangent, y: &SymTangent) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    let (x, y) = (x.mat(), y.mat());
    let xx = x * x;
    let yy = y * y;
    let xy = x * y;
    let denom = xx.trace() * yy.trace() - xy.trace().powi(2);
    let scale = xx.trace() * yy.trace();
    if denom <= DEGENERATE_PLANE_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::DegeneratePlane);
    }
    let numer = (&xx * &yy).trace() - (&xy * &xy).trace();
    Ok(-0.5 * numer / denom)
}
