//! Discrete-time systems x ↦ φ(x), the Hénon benchmark, its trapping
//! quadrilateral, and the grids used to maximize over the region.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jacobians with |det| at or below this are treated as singular.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

/// A C¹ map φ: ℝⁿ → ℝⁿ with its Jacobian A(x) = Dφ(x).
///
/// The `_into` methods are the allocation-free hot path used by grid search;
/// `jacobian_into` writes A(x) row-major.
pub trait SmoothMap: Send + Sync {
    fn dim(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn jacobian_into(&self, x: &[f64], out: &mut [f64]);

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        self.jacobian_into(x, &mut out);
        DMatrix::from_row_slice(n, n, &out)
    }

    /// Jacobian at x, rejecting (numerically) singular ones.
    fn checked_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let a = self.jacobian(x);
        let det = a.determinant();
        if !(det.abs() > SINGULAR_DET_TOL) {
            return Err(Error::NumericalDomain(format!("singular Jacobian at {x:?} (det = {det:e})")));
        }
        Ok(a)
    }
}

/// Hénon map (x, y) ↦ (a − x² + b·y, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Henon {
    pub a: f64,
    pub b: f64,
}

pub fn henon(a: f64, b: f64) -> Henon {
    Henon { a, b }
}

impl Default for Henon {
    fn default() -> Self {
        henon(1.4, 0.3)
    }
}

impl Henon {
    /// The two fixed points (x₋, x₋) and (x₊, x₊), returned as (x₋, x₊), with
    /// x± = ½(b − 1 ± √((b − 1)² + 4a)).
    pub fn fixed_points(&self) -> (f64, f64) {
        let bm1 = self.b - 1.0;
        let root = (bm1 * bm1 + 4.0 * self.a).sqrt();
        (0.5 * (bm1 - root), 0.5 * (bm1 + root))
    }

    /// Local Lyapunov dimension 1 + ln|μ₁| / |ln|μ₂|| of a fixed point (x*, x*),
    /// where μ₁, μ₂ are the Jacobian eigenvalues ordered by modulus.
    pub fn fixed_point_lyapunov_dimension(&self, x: f64) -> f64 {
        // Eigenvalues of [[−2x, b], [1, 0]] solve μ² + 2xμ − b = 0.
        let disc = (x * x + self.b).sqrt();
        let (m1, m2) = (-x - disc, -x + disc);
        let (big, small) = if m1.abs() >= m2.abs() { (m1, m2) } else { (m2, m1) };
        1.0 + big.abs().ln() / small.abs().ln().abs()
    }
}

impl SmoothMap for Henon {
    fn dim(&self) -> usize {
        2
    }

    #[inline]
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.a - x[0] * x[0] + self.b * x[1];
        out[1] = x[0];
    }

    #[inline]
    fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -2.0 * x[0];
        out[1] = self.b;
        out[2] = 1.0;
        out[3] = 0.0;
    }
}

/// A convex quadrilateral with corners listed in boundary order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadRegion {
    pub corners: [[f64; 2]; 4],
}

impl QuadRegion {
    pub fn new(corners: [[f64; 2]; 4]) -> Result<Self> {
        let region = Self { corners };
        // Convex with positive area: all edge turns share one strict sign.
        let turns: Vec<f64> = (0..4).map(|i| region.turn(i)).collect();
        let all_pos = turns.iter().all(|&t| t > 0.0);
        let all_neg = turns.iter().all(|&t| t < 0.0);
        if !(all_pos || all_neg) {
            return Err(Error::InvalidArgument("region corners must form a convex quadrilateral".into()));
        }
        Ok(region)
    }

    fn turn(&self, i: usize) -> f64 {
        let p = self.corners[i];
        let q = self.corners[(i + 1) % 4];
        let r = self.corners[(i + 2) % 4];
        (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0])
    }

    /// Bilinear image of (u, v) ∈ [0, 1]²: corners A, B, C, D sit at
    /// (0,0), (1,0), (1,1), (0,1).
    #[inline]
    pub fn point_at(&self, u: f64, v: f64) -> [f64; 2] {
        let [a, b, c, d] = self.corners;
        let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v];
        [
            w[0] * a[0] + w[1] * b[0] + w[2] * c[0] + w[3] * d[0],
            w[0] * a[1] + w[1] * b[1] + w[2] * c[1] + w[3] * d[1],
        ]
    }

    pub fn area(&self) -> f64 {
        let c = &self.corners;
        0.5 * (0..4)
            .map(|i| {
                let j = (i + 1) % 4;
                c[i][0] * c[j][1] - c[j][0] * c[i][1]
            })
            .sum::<f64>()
            .abs()
    }
}

/// Trapping quadrilateral of the standard Hénon map.
pub fn henon_region() -> QuadRegion {
    QuadRegion {
        corners: [[-1.862, 1.96], [1.848, 0.6267], [1.743, -0.6533], [-1.484, -2.3333]],
    }
}

/// Enlarged region (D moved to (−2, −2.3333)) containing both fixed points.
pub fn henon_region_enlarged() -> QuadRegion {
    QuadRegion {
        corners: [[-1.862, 1.96], [1.848, 0.6267], [1.743, -0.6533], [-2.0, -2.3333]],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: usize,
    pub refine: bool,
}

impl GridSpec {
    pub fn new(m: usize, refine: bool) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points per axis, got {m}")));
        }
        Ok(Self { m, refine })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.m - 1) as f64
    }
}

/// An axis-aligned window [u0, u1] × [v0, v1] of the unit square sampled
/// with `m` points per axis, enumerated with u as the slow index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamWindow {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub m: usize,
}

impl ParamWindow {
    pub fn unit(m: usize) -> Self {
        Self { u0: 0.0, u1: 1.0, v0: 0.0, v1: 1.0, m }
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Parameter coordinates of the `idx`-th point.
    #[inline]
    pub fn uv(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx / self.m, idx % self.m);
        let last = (self.m - 1) as f64;
        // Endpoints are hit exactly so that corners are grid points.
        let lerp = |lo: f64, hi: f64, k: usize| {
            if k == self.m - 1 {
                hi
            } else {
                lo + (hi - lo) * (k as f64 / last)
            }
        };
        (lerp(self.u0, self.u1, i), lerp(self.v0, self.v1, j))
    }

    /// Window of ±1 coarse spacing around (u, v), clipped to [0, 1]².
    pub fn around(u: f64, v: f64, coarse: &GridSpec) -> Self {
        let h = coarse.spacing();
        Self {
            u0: (u - h).max(0.0),
            u1: (u + h).min(1.0),
            v0: (v - h).max(0.0),
            v1: (v + h).min(1.0),
            m: coarse.m,
        }
    }
}

/// The m² points of the bilinear image of the uniform lattice on [0, 1]².
pub fn grid_points(region: &QuadRegion, spec: &GridSpec) -> Vec<[f64; 2]> {
    window_points(region, &ParamWindow::unit(spec.m))
}

/// m² points covering the ±1-coarse-cell neighbourhood of `center`
/// (given in parameter coordinates).
pub fn refine_around(region: &QuadRegion, spec: &GridSpec, center: (f64, f64)) -> Vec<[f64; 2]> {
    window_points(region, &ParamWindow::around(center.0, center.1, spec))
}

pub fn window_points(region: &QuadRegion, w: &ParamWindow) -> Vec<[f64; 2]> {
    (0..w.len())
        .map(|k| {
            let (u, v) = w.uv(k);
            region.point_at(u, v)
        })
        .collect()
}
