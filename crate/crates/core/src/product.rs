//! The product Hadamard manifold ℝᴺ × SPD(n) of metric parameters (a, p).
//!
//! The Euclidean factor uses the standard inner product, so the product
//! distance is d² = ‖a − b‖² + d_SPD(p, q)².

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::{self, OrderInterval, SpdPoint, SymTangent};

/// Square root of the magnitude of the sectional-curvature lower bound −1/2
/// shared by SPD(n) and every ℝᴺ × SPD(n).
pub const KAPPA_HAT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Metric parameters (a, p) encoding P(x) = e^{r_a(x)} p.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricParams {
    pub a: DVector<f64>,
    pub p: SpdPoint,
}

impl MetricParams {
    pub fn new(a: DVector<f64>, p: SpdPoint) -> Self {
        Self { a, p }
    }

    /// The flat metric P = I.
    pub fn identity(n_coeffs: usize, n: usize) -> Self {
        Self { a: DVector::zeros(n_coeffs), p: SpdPoint::identity(n) }
    }

    pub fn n_coeffs(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.p.dim()
    }
}

/// Tangent vector (da, dp) of the product manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTangent {
    pub da: DVector<f64>,
    pub dp: SymTangent,
}

impl ProductTangent {
    pub fn zeros(n_coeffs: usize, n: usize) -> Self {
        Self { da: DVector::zeros(n_coeffs), dp: SymTangent::zeros(n) }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { da: &self.da * c, dp: self.dp.scale(c) }
    }

    pub fn add(&self, other: &ProductTangent) -> Self {
        Self { da: &self.da + &other.da, dp: self.dp.add(&other.dp) }
    }

    /// Norm at the base point x: ‖da‖² + ⟨dp, dp⟩_p.
    pub fn norm_at(&self, x: &MetricParams) -> Result<f64> {
        check_compatible(x, self)?;
        let pn = spd::norm(&x.p, &self.dp)?;
        Ok((self.da.norm_squared() + pn * pn).sqrt())
    }

    pub fn inner_at(&self, x: &MetricParams, other: &ProductTangent) -> Result<f64> {
        check_compatible(x, self)?;
        Ok(self.da.dot(&other.da) + spd::inner(&x.p, &self.dp, &other.dp)?)
    }
}

fn check_compatible(x: &MetricParams, v: &ProductTangent) -> Result<()> {
    if x.a.len() != v.da.len() {
        return Err(Error::DimensionMismatch { expected: x.a.len(), got: v.da.len() });
    }
    if x.p.dim() != v.dp.dim() {
        return Err(Error::DimensionMismatch { expected: x.p.dim(), got: v.dp.dim() });
    }
    Ok(())
}

/// Product of a closed Euclidean ball of radius R (for a) and [αI, βI] (for p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    ball_radius: f64,
    interval: OrderInterval,
}

impl FeasibleSet {
    pub fn new(ball_radius: f64, interval: OrderInterval) -> Result<Self> {
        if !(ball_radius > 0.0 && ball_radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {ball_radius}")));
        }
        Ok(Self { ball_radius, interval })
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    pub fn interval(&self) -> &OrderInterval {
        &self.interval
    }

    pub fn contains(&self, x: &MetricParams) -> bool {
        // Ball membership allows for the rounding of the radial rescaling.
        x.a.norm() <= self.ball_radius * (1.0 + 1e-12) && self.interval.contains(&x.p)
    }
}

/// Product distance √(‖a − b‖² + d_SPD(p, q)²).
pub fn product_dist(u: &MetricParams, v: &MetricParams) -> Result<f64> {
    if u.a.len() != v.a.len() {
        return Err(Error::DimensionMismatch { expected: u.a.len(), got: v.a.len() });
    }
    let dp = spd::dist(&u.p, &v.p)?;
    Ok(((&u.a - &v.a).norm_squared() + dp * dp).sqrt())
}

/// One descent move exp_x(−t · dir/‖dir‖_x): a Euclidean translation of a and
/// an SPD exponential step for p, both along the normalized direction.
pub fn product_step(x: &MetricParams, t: f64, dir: &ProductTangent) -> Result<MetricParams> {
    let n = dir.norm_at(x)?;
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroDirection);
    }
    let c = -t / n;
    let a = &x.a + &dir.da * c;
    let p = spd::exp_map(&x.p, &dir.dp.scale(c))?;
    Ok(MetricParams { a, p })
}

/// Metric projection onto the feasible set: radial clipping of a and
/// eigenvalue clipping of p.
pub fn project_feasible(x: &MetricParams, set: &FeasibleSet) -> MetricParams {
    let norm = x.a.norm();
    let a = if norm > set.ball_radius { &x.a * (set.ball_radius / norm) } else { x.a.clone() };
    MetricParams { a, p: spd::project_interval(&x.p, &set.interval) }
}

/// Diameter of the feasible set for SPD dimension n and N coefficients:
/// √(4R² + n ln²(β/α)); the ball term vanishes when N = 0.
pub fn feasible_diameter(set: &FeasibleSet, n: usize, n_coeffs: usize) -> f64 {
    let ball = if n_coeffs == 0 { 0.0 } else { 2.0 * set.ball_radius };
    let spd_d = spd::interval_diameter(&set.interval, n);
    (ball * ball + spd_d * spd_d).sqrt()
}
