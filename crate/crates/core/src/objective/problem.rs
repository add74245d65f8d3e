use std::f64::consts::LN_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{combine, subgrad_spd, ObjectiveIndex, GAP_TOL, MAX_EXPONENT};
use crate::error::{Error, Result};
use crate::linalg::{singular_values, singular_values_2x2};
use crate::poly::{dot, MonomialBasis};
use crate::product::{MetricParams, ProductTangent};
use crate::spd::SymTangent;
use crate::system::{GridSpec, ParamWindow, QuadRegion, SmoothMap, SINGULAR_DET_TOL};

/// Point data is cached when it fits in this many f64 values.
const CACHE_BUDGET: usize = 1 << 23;

/// Value and subgradient of an objective at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad: ProductTangent,
    /// False when the spectral gap at the maximizer was below tolerance.
    pub exact: bool,
}

/// A function on ℝᴺ × SPD(n) with (inexact) subgradients.
pub trait Objective: Send + Sync {
    fn n_coeffs(&self) -> usize;
    fn n(&self) -> usize;
    fn evaluate(&self, params: &MetricParams) -> Result<Evaluation>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMax {
    pub x: Vec<f64>,
    /// Parameter coordinates in the region, when the domain is a region.
    pub uv: Option<(f64, f64)>,
    pub value: f64,
    /// Active k at the maximizer (the fixed k for fractional indices).
    pub active_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientResult {
    pub grad: ProductTangent,
    pub value: f64,
    pub maximizer: Vec<f64>,
    pub active_k: usize,
    pub gap_delta: f64,
    pub exact_flag: bool,
}

/// Where x ranges when the objective is maximized.
#[derive(Debug, Clone)]
pub enum Domain {
    /// Bilinear grid over a quadrilateral, optionally refined around the
    /// coarse maximizer.
    Quad { region: QuadRegion, grid: GridSpec },
    /// An explicit finite point set.
    Points(Vec<Vec<f64>>),
}

impl Domain {
    fn len(&self) -> usize {
        match self {
            Domain::Quad { grid, .. } => grid.m * grid.m,
            Domain::Points(pts) => pts.len(),
        }
    }
}

/// Jacobians and monomial differences m(φ(x)) − m(x) at the coarse points.
struct PointCache {
    jac: Vec<f64>,
    dm: Vec<f64>,
}

/// Per-thread buffers for uncached evaluation.
struct Scratch {
    x: Vec<f64>,
    fx: Vec<f64>,
    jac: Vec<f64>,
    mx: Vec<f64>,
    dm: Vec<f64>,
}

/// p^{±1/2} and the coefficients, fixed for one sweep.
struct Frozen<'a> {
    n: usize,
    ps: DMatrix<f64>,
    pis: DMatrix<f64>,
    ps2: [f64; 4],
    pis2: [f64; 4],
    a: &'a [f64],
}

/// J_{k+s} (or the restoration objective) maximized over a domain for a
/// given system and polynomial basis.
pub struct SingularValueProblem {
    map: Arc<dyn SmoothMap>,
    domain: Domain,
    basis: MonomialBasis,
    index: ObjectiveIndex,
    cache: Option<Arc<PointCache>>,
}

impl std::fmt::Debug for SingularValueProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularValueProblem")
            .field("dim", &self.map.dim())
            .field("domain", &self.domain)
            .field("basis", &self.basis)
            .field("index", &self.index)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl SingularValueProblem {
    pub fn new(map: Arc<dyn SmoothMap>, domain: Domain, basis: MonomialBasis, index: ObjectiveIndex) -> Result<Self> {
        let n = map.dim();
        if basis.n_vars() != n {
            return Err(Error::DimensionMismatch { expected: n, got: basis.n_vars() });
        }
        index.check(n)?;
        match &domain {
            Domain::Quad { .. } if n != 2 => {
                return Err(Error::DimensionMismatch { expected: 2, got: n });
            }
            Domain::Points(pts) => {
                if pts.is_empty() {
                    return Err(Error::InvalidArgument("empty point set".into()));
                }
                if let Some(bad) = pts.iter().find(|p| p.len() != n) {
                    return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
                }
            }
            _ => {}
        }
        let mut problem = Self { map, domain, basis, index, cache: None };
        let len = problem.domain.len();
        if len * (n * n + problem.basis.size()) <= CACHE_BUDGET {
            problem.cache = Some(Arc::new(problem.build_cache()?));
        }
        Ok(problem)
    }

    /// Hénon-style setup over a quadrilateral grid.
    pub fn on_region(
        map: Arc<dyn SmoothMap>,
        region: QuadRegion,
        grid: GridSpec,
        basis: MonomialBasis,
        index: ObjectiveIndex,
    ) -> Result<Self> {
        Self::new(map, Domain::Quad { region, grid }, basis, index)
    }

    pub fn map(&self) -> &dyn SmoothMap {
        self.map.as_ref()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn index(&self) -> ObjectiveIndex {
        self.index
    }

    /// Same problem with another index (shares the cached point data).
    pub fn with_index(&self, index: ObjectiveIndex) -> Result<Self> {
        index.check(self.map.dim())?;
        Ok(Self {
            map: Arc::clone(&self.map),
            domain: self.domain.clone(),
            basis: self.basis.clone(),
            index,
            cache: self.cache.clone(),
        })
    }

    fn scratch(&self) -> Scratch {
        let n = self.map.dim();
        let nb = self.basis.size();
        Scratch { x: vec![0.0; n], fx: vec![0.0; n], jac: vec![0.0; n * n], mx: vec![0.0; nb], dm: vec![0.0; nb] }
    }

    fn coarse_point(&self, idx: usize, out: &mut [f64]) {
        match &self.domain {
            Domain::Quad { region, grid } => {
                let (u, v) = ParamWindow::unit(grid.m).uv(idx);
                out.copy_from_slice(&region.point_at(u, v));
            }
            Domain::Points(pts) => out.copy_from_slice(&pts[idx]),
        }
    }

    fn fill_point(&self, s: &mut Scratch) {
        self.map.eval_into(&s.x, &mut s.fx);
        self.map.jacobian_into(&s.x, &mut s.jac);
        self.basis.monomials_into(&s.x, &mut s.mx);
        self.basis.monomials_into(&s.fx, &mut s.dm);
        for (d, m) in s.dm.iter_mut().zip(&s.mx) {
            *d -= m;
        }
    }

    fn build_cache(&self) -> Result<PointCache> {
        let n = self.map.dim();
        let nb = self.basis.size();
        let len = self.domain.len();
        let mut jac = vec![0.0; len * n * n];
        let mut dm = vec![0.0; len * nb];
        let mut s = self.scratch();
        for idx in 0..len {
            self.coarse_point(idx, &mut s.x);
            self.fill_point(&mut s);
            jac[idx * n * n..(idx + 1) * n * n].copy_from_slice(&s.jac);
            dm[idx * nb..(idx + 1) * nb].copy_from_slice(&s.dm);
        }
        Ok(PointCache { jac, dm })
    }

    fn freeze<'a>(&self, params: &'a MetricParams) -> Result<Frozen<'a>> {
        let n = self.map.dim();
        if params.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: params.n() });
        }
        if params.n_coeffs() != self.basis.size() {
            return Err(Error::DimensionMismatch { expected: self.basis.size(), got: params.n_coeffs() });
        }
        let ps = params.p.sqrt();
        let pis = params.p.inv_sqrt();
        let flat = |m: &DMatrix<f64>| if n == 2 { [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]] } else { [0.0; 4] };
        Ok(Frozen { n, ps2: flat(&ps), pis2: flat(&pis), ps, pis, a: params.a.as_slice() })
    }

    /// Objective value at one point from its Jacobian (row-major) and
    /// monomial difference. Returns (value, active k).
    #[inline]
    fn kernel(&self, fr: &Frozen<'_>, jac: &[f64], dm: &[f64]) -> Result<(f64, usize)> {
        let delta_r = dot(fr.a, dm);
        if !(delta_r.abs() <= 2.0 * MAX_EXPONENT) {
            return Err(Error::NumericalDomain(format!("metric exponent difference {delta_r:e} out of range")));
        }
        let out = if fr.n == 2 {
            let (a, b, c, d) = (jac[0], jac[1], jac[2], jac[3]);
            if !((a * d - b * c).abs() > SINGULAR_DET_TOL) {
                return Err(Error::NumericalDomain("singular Jacobian on the grid".into()));
            }
            let t = &fr.pis2;
            // M = A·p^{-1/2}
            let m = [
                a * t[0] + b * t[2],
                a * t[1] + b * t[3],
                c * t[0] + d * t[2],
                c * t[1] + d * t[3],
            ];
            let s = &fr.ps2;
            let (s1, s2) = singular_values_2x2(
                s[0] * m[0] + s[1] * m[2],
                s[0] * m[1] + s[1] * m[3],
                s[2] * m[0] + s[3] * m[2],
                s[2] * m[1] + s[3] * m[3],
            );
            combine(self.index, &[s1.log2(), s2.log2()], delta_r)
        } else {
            let a = DMatrix::from_row_slice(fr.n, fr.n, jac);
            if !(a.determinant().abs() > SINGULAR_DET_TOL) {
                return Err(Error::NumericalDomain("singular Jacobian in the domain".into()));
            }
            let logs: Vec<f64> = singular_values(&(&fr.ps * a * &fr.pis)).iter().map(|v| v.log2()).collect();
            combine(self.index, &logs, delta_r)
        };
        if !out.0.is_finite() {
            return Err(Error::NumericalDomain("non-finite objective value".into()));
        }
        Ok(out)
    }

    /// Objective value at an arbitrary point x and the active k.
    pub fn value_at(&self, params: &MetricParams, x: &[f64]) -> Result<(f64, usize)> {
        let fr = self.freeze(params)?;
        if x.len() != fr.n {
            return Err(Error::DimensionMismatch { expected: fr.n, got: x.len() });
        }
        let mut s = self.scratch();
        s.x.copy_from_slice(x);
        self.fill_point(&mut s);
        self.kernel(&fr, &s.jac, &s.dm)
    }

    /// Argmax over the coarse points: (value, index, k).
    fn sweep_coarse(&self, fr: &Frozen<'_>) -> Result<(f64, usize, usize)> {
        let len = self.domain.len();
        let n = fr.n;
        let nb = self.basis.size();
        match &self.cache {
            Some(c) => (0..len)
                .into_par_iter()
                .map(|i| {
                    let (v, k) = self.kernel(fr, &c.jac[i * n * n..(i + 1) * n * n], &c.dm[i * nb..(i + 1) * nb])?;
                    Ok::<_, Error>((v, i, k))
                })
                .try_reduce(identity, |a, b| Ok(better(a, b))),
            None => (0..len)
                .into_par_iter()
                .map_init(
                    || self.scratch(),
                    |s, i| {
                        self.coarse_point(i, &mut s.x);
                        self.fill_point(s);
                        let (v, k) = self.kernel(fr, &s.jac, &s.dm)?;
                        Ok::<_, Error>((v, i, k))
                    },
                )
                .try_reduce(identity, |a, b| Ok(better(a, b))),
        }
    }

    fn sweep_window(&self, fr: &Frozen<'_>, region: &QuadRegion, w: &ParamWindow) -> Result<(f64, usize, usize)> {
        (0..w.len())
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |s, i| {
                    let (u, v) = w.uv(i);
                    s.x.copy_from_slice(&region.point_at(u, v));
                    self.fill_point(s);
                    let (val, k) = self.kernel(fr, &s.jac, &s.dm)?;
                    Ok::<_, Error>((val, i, k))
                },
            )
            .try_reduce(identity, |a, b| Ok(better(a, b)))
    }

    /// Maximum of the objective over the coarse points and, when enabled, a
    /// refinement window of ±1 coarse spacing around the coarse maximizer.
    /// Ties go to the first point in enumeration order; the refined
    /// maximizer replaces the coarse one only if strictly larger.
    pub fn maximize(&self, params: &MetricParams) -> Result<GridMax> {
        let fr = self.freeze(params)?;
        let (value, idx, k) = self.sweep_coarse(&fr)?;
        match &self.domain {
            Domain::Points(pts) => Ok(GridMax { x: pts[idx].clone(), uv: None, value, active_k: k }),
            Domain::Quad { region, grid } => {
                let (u, v) = ParamWindow::unit(grid.m).uv(idx);
                let mut best = GridMax { x: region.point_at(u, v).to_vec(), uv: Some((u, v)), value, active_k: k };
                if grid.refine {
                    let w = ParamWindow::around(u, v, grid);
                    let (rv, ri, rk) = self.sweep_window(&fr, region, &w)?;
                    if rv > best.value {
                        let (ru, rvv) = w.uv(ri);
                        best = GridMax { x: region.point_at(ru, rvv).to_vec(), uv: Some((ru, rvv)), value: rv, active_k: rk };
                    }
                }
                Ok(best)
            }
        }
    }

    /// A subgradient of the maximized objective, taken at the maximizer x*.
    pub fn subgradient(&self, params: &MetricParams) -> Result<SubgradientResult> {
        let gm = self.maximize(params)?;
        self.subgradient_at(params, &gm)
    }

    /// Subgradient of J_{·,x*} at x* = `gm.x`: the a-part is the scaled
    /// monomial difference, the p-part blends the k and k+1 gradients with
    /// weights (1 − s, s); restoration uses the active k*.
    pub fn subgradient_at(&self, params: &MetricParams, gm: &GridMax) -> Result<SubgradientResult> {
        let n = self.map.dim();
        let x = &gm.x;
        let a_mat = self.map.checked_jacobian(x)?;
        let mut dm = self.basis.coeff_gradient(&self.map.eval(x))?;
        for (d, m) in dm.iter_mut().zip(self.basis.coeff_gradient(x)?) {
            *d -= m;
        }
        let dm = DVector::from_vec(dm);
        let alpha1 = singular_values(&(params.p.sqrt() * &a_mat * params.p.inv_sqrt()))[0];

        let (weight, dp, gap) = match self.index {
            ObjectiveIndex::Fractional { k, s } => {
                let (gk, gap_k) = subgrad_spd(&params.p, &a_mat, k)?;
                if s > 0.0 {
                    let (gk1, gap_k1) = subgrad_spd(&params.p, &a_mat, k + 1)?;
                    (k as f64 + s, gk.scale(1.0 - s).add(&gk1.scale(s)), gap_k.min(gap_k1))
                } else {
                    (k as f64, gk, gap_k)
                }
            }
            ObjectiveIndex::Restoration => {
                let (g, gap) = subgrad_spd(&params.p, &a_mat, gm.active_k)?;
                (gm.active_k as f64, g, gap)
            }
        };
        let da = dm * (weight / (2.0 * LN_2));
        debug_assert_eq!(dp.dim(), n);
        Ok(SubgradientResult {
            grad: ProductTangent { da, dp: SymTangent::from_symmetrized(dp.mat()) },
            value: gm.value,
            maximizer: gm.x.clone(),
            active_k: gm.active_k,
            gap_delta: gap,
            exact_flag: gap > GAP_TOL * alpha1,
        })
    }
}

fn identity() -> (f64, usize, usize) {
    (f64::NEG_INFINITY, usize::MAX, 0)
}

/// Larger value wins; equal values go to the smaller index.
fn better(a: (f64, usize, usize), b: (f64, usize, usize)) -> (f64, usize, usize) {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

impl Objective for SingularValueProblem {
    fn n_coeffs(&self) -> usize {
        self.basis.size()
    }

    fn n(&self) -> usize {
        self.map.dim()
    }

    fn evaluate(&self, params: &MetricParams) -> Result<Evaluation> {
        let r = self.subgradient(params)?;
        Ok(Evaluation { value: r.value, grad: r.grad, exact: r.exact_flag })
    }
}

/// Maximum of J (or the restoration objective) over a gridded region.
pub fn maximize_over_region(
    params: &MetricParams,
    basis: &MonomialBasis,
    map: Arc<dyn SmoothMap>,
    region: &QuadRegion,
    grid: &GridSpec,
    idx: ObjectiveIndex,
) -> Result<GridMax> {
    SingularValueProblem::on_region(map, *region, *grid, basis.clone(), idx)?.maximize(params)
}

/// Subgradient of the maximized objective over a gridded region.
pub fn subgradient(
    params: &MetricParams,
    basis: &MonomialBasis,
    map: Arc<dyn SmoothMap>,
    region: &QuadRegion,
    grid: &GridSpec,
    idx: ObjectiveIndex,
) -> Result<SubgradientResult> {
    SingularValueProblem::on_region(map, *region, *grid, basis.clone(), idx)?.subgradient(params)
}
