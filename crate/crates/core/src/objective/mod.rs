//! Singular values of a system's derivative with respect to a Riemannian
//! metric P(x) = e^{r_a(x)} p, and the singular value functions built on them.
//!
//! Objective values are in bits (log₂). For an index k + s,
//!
//! ```text
//! Σ_{k+s,x}(P) = Σ_{i≤k} log₂ αᵢᴾ(x) + s·log₂ α_{k+1}ᴾ(x)
//! J_{k+s,x}(a, p) = (k+s)/(2 ln 2)·(r_a(φ(x)) − r_a(x)) + Σ_{k+s,x}(p)
//! ```
//!
//! and the restoration objective is max_{0≤k≤n} J_{k,x} with J_{0,x} ≡ 0.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::poly::MonomialBasis;
use crate::product::MetricParams;
use crate::spd::SpdPoint;
use crate::system::SmoothMap;

mod problem;
mod subgradient;

pub use problem::{
    maximize_over_region, subgradient, Domain, Evaluation, GridMax, Objective, SingularValueProblem,
    SubgradientResult,
};
pub use subgradient::{solve_sqrt_sylvester, subgrad_spd, wedin_error_bound, GAP_TOL};

/// Largest |r_a(x)| for which e^{r_a(x)} is formed explicitly.
pub const MAX_EXPONENT: f64 = 700.0;

/// Singular values α₁ ≥ … ≥ αₙ > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    alphas: Vec<f64>,
}

impl SingularSpectrum {
    pub fn new(mut alphas: Vec<f64>) -> Result<Self> {
        alphas.sort_by(|a, b| b.total_cmp(a));
        if alphas.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::NumericalDomain(format!("singular values {alphas:?} not all positive")));
        }
        Ok(Self { alphas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn log2(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a.log2()).collect()
    }
}

/// Which singular value function is optimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveIndex {
    /// Σ_{k+s}: used for Lyapunov dimension bounds k + s.
    Fractional { k: usize, s: f64 },
    /// max_{0≤k≤n} Σ_k: restoration entropy.
    Restoration,
}

impl ObjectiveIndex {
    /// Validates 0 ≤ k ≤ n, 0 ≤ s < 1 and k ≤ n − 1 whenever s > 0.
    pub fn fractional(k: usize, s: f64, n: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("s = {s} must lie in [0, 1)")));
        }
        if k > n || (s > 0.0 && k + 1 > n) {
            return Err(Error::InvalidArgument(format!("index k + s = {k} + {s} out of range for n = {n}")));
        }
        Ok(Self::Fractional { k, s })
    }

    fn check(&self, n: usize) -> Result<()> {
        match *self {
            Self::Fractional { k, s } => Self::fractional(k, s, n).map(|_| ()),
            Self::Restoration => Ok(()),
        }
    }
}

/// Σ_{k+s} from log₂ singular values in descending order.
#[inline]
pub(crate) fn sigma_from_logs(logs: &[f64], k: usize, s: f64) -> f64 {
    let head: f64 = logs[..k].iter().sum();
    if s > 0.0 {
        head + s * logs[k]
    } else {
        head
    }
}

/// Value of the index's function given log₂ singular values of ζ_x(p) and the
/// scalar term Δr = r_a(φ(x)) − r_a(x). Restoration returns (value, k*) with
/// ties broken toward larger k.
#[inline]
pub(crate) fn combine(idx: ObjectiveIndex, logs: &[f64], delta_r: f64) -> (f64, usize) {
    let c = delta_r / (2.0 * LN_2);
    match idx {
        ObjectiveIndex::Fractional { k, s } => ((k as f64 + s) * c + sigma_from_logs(logs, k, s), k),
        ObjectiveIndex::Restoration => {
            let mut best = (0.0, 0);
            let mut acc = 0.0;
            for (k, l) in logs.iter().enumerate() {
                acc += l;
                let v = (k + 1) as f64 * c + acc;
                if v >= best.0 {
                    best = (v, k + 1);
                }
            }
            best
        }
    }
}

/// P(x) = e^{r_a(x)} p.
pub fn metric_at(params: &MetricParams, basis: &MonomialBasis, x: &[f64]) -> Result<SpdPoint> {
    let r = basis.eval(params.a.as_slice(), x)?;
    if !(r.abs() <= MAX_EXPONENT) {
        return Err(Error::NumericalDomain(format!("metric exponent r_a(x) = {r:e} out of range")));
    }
    params.p.scaled(r.exp())
}

/// Singular values of B(x) = P(φ(x))^{1/2} A(x) P(x)^{−1/2}, computed from the
/// full metric without splitting off the scalar factor.
pub fn weighted_singular_values(
    params: &MetricParams,
    basis: &MonomialBasis,
    map: &dyn SmoothMap,
    x: &[f64],
) -> Result<SingularSpectrum> {
    let a = map.checked_jacobian(x)?;
    let px = metric_at(params, basis, x)?;
    let py = metric_at(params, basis, &map.eval(x))?;
    let b = py.sqrt() * a * px.inv_sqrt();
    SingularSpectrum::new(singular_values(&b))
}

/// Σ_{k+s,x}(P) from the full weighted spectrum (restoration: max over k).
pub fn sigma_ks(
    params: &MetricParams,
    basis: &MonomialBasis,
    map: &dyn SmoothMap,
    x: &[f64],
    idx: ObjectiveIndex,
) -> Result<f64> {
    idx.check(map.dim())?;
    let logs = weighted_singular_values(params, basis, map, x)?.log2();
    Ok(combine(idx, &logs, 0.0).0)
}

/// Singular values of ζ_x(p) = p^{1/2} A p^{−1/2}.
pub fn zeta_spectrum(p: &SpdPoint, a: &DMatrix<f64>) -> Result<SingularSpectrum> {
    let zeta = p.sqrt() * a * p.inv_sqrt();
    SingularSpectrum::new(singular_values(&zeta))
}

/// J_{k+s,x}(a, p) through the split into the linear a-part and Σ_{k+s,x}(p).
pub fn j_value(
    params: &MetricParams,
    basis: &MonomialBasis,
    map: &dyn SmoothMap,
    x: &[f64],
    idx: ObjectiveIndex,
) -> Result<f64> {
    idx.check(map.dim())?;
    let a = map.checked_jacobian(x)?;
    let coeffs = params.a.as_slice();
    let delta_r = basis.eval(coeffs, &map.eval(x))? - basis.eval(coeffs, x)?;
    let logs = zeta_spectrum(&params.p, &a)?.log2();
    Ok(combine(idx, &logs, delta_r).0)
}

/// √n / ln 2, a Lipschitz constant of p ↦ Σ_{k+s,x}(p) in the trace metric.
pub fn lipschitz_constant(n: usize) -> f64 {
    (n as f64).sqrt() / LN_2
}

/// σ⃗(g) = (log₂ α₁(g), …, log₂ αₙ(g)).
pub fn sigma_vec(g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let sv = singular_values(g);
    let largest = sv.first().copied().unwrap_or(0.0);
    if sv.iter().any(|&s| !(s > 1e-300) || s <= 1e-15 * largest) {
        return Err(Error::NumericalDomain("singular matrix".into()));
    }
    Ok(sv.iter().map(|s| s.log2()).collect())
}

/// ξ ⪯ η on the cone of descending vectors: prefix sums of ξ bounded by
/// those of η, with equality of the full sums (all up to 1e-9).
pub fn majorization_leq(xi: &[f64], eta: &[f64]) -> Result<bool> {
    const TOL: f64 = 1e-9;
    if xi.len() != eta.len() {
        return Err(Error::DimensionMismatch { expected: xi.len(), got: eta.len() });
    }
    let descending = |v: &[f64]| v.windows(2).all(|w| w[0] >= w[1] - 1e-12);
    if !descending(xi) || !descending(eta) {
        return Err(Error::InvalidArgument("majorization inputs must be in descending order".into()));
    }
    let n = xi.len();
    let (mut sx, mut se) = (0.0, 0.0);
    for i in 0..n {
        sx += xi[i];
        se += eta[i];
        let ok = if i + 1 < n { sx <= se + TOL } else { (sx - se).abs() <= TOL };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The convexity relation of σ⃗ along metric geodesics at one point x:
/// returns (σ⃗ of the blended B, (1−θ)σ⃗(B_P) + θσ⃗(B_Q)).
pub fn blended_sigma_vec(
    p_x: &SpdPoint,
    p_y: &SpdPoint,
    q_x: &SpdPoint,
    q_y: &SpdPoint,
    a: &DMatrix<f64>,
    theta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    use crate::spd::geodesic;
    let m_x = geodesic(p_x, q_x, theta)?;
    let m_y = geodesic(p_y, q_y, theta)?;
    let lhs = sigma_vec(&(m_y.sqrt() * a * m_x.inv_sqrt()))?;
    let sp = sigma_vec(&(p_y.sqrt() * a * p_x.inv_sqrt()))?;
    let sq = sigma_vec(&(q_y.sqrt() * a * q_x.inv_sqrt()))?;
    let rhs = sp.iter().zip(&sq).map(|(u, v)| (1.0 - theta) * u + theta * v).collect();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests;
