//! Randomized property suites over the geometry, the objective and the
//! solver. Each suite reports whether it held on all samples and the worst
//! observed margin.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::objective::{blended_sigma_vec, lipschitz_constant, majorization_leq, sigma_ks, subgrad_spd, wedin_error_bound, ObjectiveIndex};
use crate::poly::MonomialBasis;
use crate::product::{product_dist, project_feasible, FeasibleSet, MetricParams, KAPPA_HAT};
use crate::random::{self, SuiteRng};
use crate::solver::{bound_constant, constant_step_optimal, run, zeta_constant, DistanceSquared, SolverConfig, StepRule};
use crate::spd::{self, OrderInterval, SpdPoint, SymTangent};
use crate::system::{henon_region, Henon};

/// Signature of the SPD subgradient routine under test.
pub type SubgradFn = fn(&SpdPoint, &DMatrix<f64>, usize) -> Result<(SymTangent, f64)>;

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub seed: u64,
    /// Multiplies every suite's sample count (at least one sample is kept).
    pub scale: f64,
    pub subgrad: SubgradFn,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { seed: 20240611, scale: 1.0, subgrad: subgrad_spd }
    }
}

impl CheckConfig {
    fn count(&self, base: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub samples: usize,
    /// Suite-specific worst case (largest violation or extreme value).
    pub worst: f64,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, samples: usize, worst: f64, detail: String) -> SuiteOutcome {
    SuiteOutcome { name, passed, samples, worst, detail }
}

fn unit(rng: &mut SuiteRng, p: &SpdPoint) -> Result<SymTangent> {
    let h = random::tangent(rng, p.dim());
    let n = spd::norm(p, &h)?;
    Ok(h.scale(1.0 / n))
}

fn j2(p: &SpdPoint, a: &DMatrix<f64>, k: usize) -> f64 {
    let z = p.sqrt() * a * p.inv_sqrt();
    let mut sv: Vec<f64> = z.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv[..k].iter().map(|v| v.log2()).sum()
}

/// Sectional curvature at I lies in [−1/2, 0] and −1/2 is approached.
pub fn curvature(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed);
    let count = cfg.count(2000);
    let mut min = f64::INFINITY;
    let mut used = 0;
    for i in 0..count {
        let n = 2 + i % 3;
        let mut x = random::sym_matrix(&mut rng, n, 1.0);
        let mut y = random::sym_matrix(&mut rng, n, 1.0);
        if i % 2 == 1 {
            // traceless planes reach the extreme value
            let id = DMatrix::<f64>::identity(n, n);
            x -= &id * (x.trace() / n as f64);
            y -= &id * (y.trace() / n as f64);
        }
        match spd::sectional_curvature_identity(&SymTangent::from_symmetrized(&x), &SymTangent::from_symmetrized(&y)) {
            Ok(k) => {
                min = min.min(k);
                used += 1;
            }
            Err(crate::Error::DegeneratePlane) => {}
            Err(e) => return Err(e),
        }
    }
    let passed = (-0.5 - 1e-9..=-0.49).contains(&min);
    Ok(outcome("curvature", passed, used, min, format!("minimum sampled curvature {min}")))
}

/// Projection onto ball × [αI, βI] is idempotent and nonexpansive.
pub fn projection(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(1));
    let set = FeasibleSet::new(1.5, OrderInterval::new(0.5, 2.0)?)?;
    let count = cfg.count(1000);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..count {
        let mk = |rng: &mut SuiteRng| {
            MetricParams::new(DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0)), random::spd(rng, 2, 1.0))
        };
        let (x, y) = (mk(&mut rng), mk(&mut rng));
        let (px, py) = (project_feasible(&x, &set), project_feasible(&y, &set));
        let excess = product_dist(&px, &py)? - product_dist(&x, &y)?;
        let idem = product_dist(&px, &project_feasible(&px, &set))?;
        worst = worst.max(excess).max(idem - 1e-12);
    }
    let passed = worst <= 1e-10;
    Ok(outcome("projection", passed, count, worst, format!("largest distance increase {worst:e}")))
}

/// Σ_{k+s,x} is convex along geodesics of the parameter space.
pub fn convexity(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(2));
    let h = Henon::default();
    let region = henon_region();
    let basis = MonomialBasis::new(2, 3)?;
    let count = cfg.count(500);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let mk = |rng: &mut SuiteRng| {
            MetricParams::new(DVector::from_fn(9, |_, _| rng.random_range(-0.3..0.3)), random::spd(rng, 2, 0.6))
        };
        let (pp, qq) = (mk(&mut rng), mk(&mut rng));
        let theta = [0.25, 0.5, 0.75][rng.random_range(0..3)];
        let mid = MetricParams::new(&pp.a * (1.0 - theta) + &qq.a * theta, spd::geodesic(&pp.p, &qq.p, theta)?);
        let x = region.point_at(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let idx = ObjectiveIndex::fractional(rng.random_range(0..2), rng.random_range(0.0..1.0), 2)?;
        let f = |m: &MetricParams| sigma_ks(m, &basis, &h, &x, idx);
        worst = worst.max(f(&mid)? - ((1.0 - theta) * f(&pp)? + theta * f(&qq)?));
    }
    Ok(outcome("convexity", worst <= 1e-9, count, worst, format!("largest convexity violation {worst:e}")))
}

/// σ⃗ of the geodesically blended matrix is majorized by the blend of σ⃗.
pub fn majorization(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(3));
    let count = cfg.count(500);
    let mut failures = 0;
    for i in 0..count {
        let n = 2 + i % 2;
        let a = random::invertible(&mut rng, n);
        let pts: Vec<SpdPoint> = (0..4).map(|_| random::spd(&mut rng, n, 0.7)).collect();
        let theta = rng.random_range(0.0..=1.0);
        let (lhs, rhs) = blended_sigma_vec(&pts[0], &pts[1], &pts[2], &pts[3], &a, theta)?;
        if !majorization_leq(&lhs, &rhs)? {
            failures += 1;
        }
    }
    Ok(outcome("majorization", failures == 0, count, failures as f64, format!("{failures} violations")))
}

/// Directional derivatives of Σ_k(p) match ⟨subgradient, h⟩_p (central
/// differences with step 1e-5, relative tolerance 1e-5).
pub fn finite_differences(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(4));
    let count = cfg.count(200);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let n = 2 + done % 2;
        let p = random::spd(&mut rng, n, 0.6);
        let a = random::invertible(&mut rng, n);
        let k = rng.random_range(1..n);
        let sv = crate::linalg::singular_values(&(p.sqrt() * &a * p.inv_sqrt()));
        if sv[k - 1] - sv[k] < 0.05 * sv[0] {
            continue;
        }
        let (g, _) = (cfg.subgrad)(&p, &a, k)?;
        let h = unit(&mut rng, &p)?;
        let fd = (j2(&spd::exp_map(&p, &h.scale(eps))?, &a, k) - j2(&spd::exp_map(&p, &h.scale(-eps))?, &a, k)) / (2.0 * eps);
        let an = spd::inner(&p, &g, &h)?;
        worst = worst.max((fd - an).abs() / an.abs().max(1.0));
        done += 1;
    }
    Ok(outcome("finite_differences", worst <= 1e-5, count, worst, format!("largest relative error {worst:e}")))
}

/// |Σ_k(p) − Σ_k(q)| ≤ (√n/ln 2)·d(p, q).
pub fn lipschitz(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(5));
    let count = cfg.count(10_000);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..count {
        let n = 2 + i % 2;
        let a = random::invertible(&mut rng, n);
        let p = random::spd(&mut rng, n, 0.8);
        let q = random::spd(&mut rng, n, 0.8);
        let k = rng.random_range(1..=n);
        let d = spd::dist(&p, &q)?;
        worst = worst.max((j2(&p, &a, k) - j2(&q, &a, k)).abs() - lipschitz_constant(n) * d);
    }
    Ok(outcome("lipschitz", worst <= 1e-10, count, worst, format!("largest excess over L·d {worst:e}")))
}

/// The perturbation bound dominates the change of the computed subgradient.
pub fn wedin(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(6));
    let count = cfg.count(1000);
    let mut worst = f64::NEG_INFINITY;
    let mut done = 0;
    while done < count {
        let n = 2 + done % 2;
        let p = random::spd(&mut rng, n, 0.5);
        let ax = random::invertible(&mut rng, n);
        let ay = &ax + random::gaussian_matrix(&mut rng, n, n) * rng.random_range(1e-4..1e-2);
        let k = rng.random_range(1..n);
        let bound = match wedin_error_bound(&p, &ax, &ay, k) {
            Ok(b) => b,
            Err(crate::Error::GapViolation(_)) => continue,
            Err(e) => return Err(e),
        };
        let (gx, _) = (cfg.subgrad)(&p, &ax, k)?;
        let (gy, _) = (cfg.subgrad)(&p, &ay, k)?;
        worst = worst.max(spd::norm(&p, &gx.sub(&gy))? - bound);
        done += 1;
    }
    Ok(outcome("wedin", worst <= 1e-12, count, worst, format!("largest excess over the bound {worst:e}")))
}

/// exp_p(log_p q) = q and log_p(exp_p v) = v.
pub fn exp_log(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(7));
    let count = cfg.count(1000);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let n = 2 + i % 3;
        let p = random::spd(&mut rng, n, 0.8);
        let q = random::spd(&mut rng, n, 0.8);
        let back = spd::exp_map(&p, &spd::log_map(&p, &q)?)?;
        let e1 = (back.mat() - q.mat()).norm() / q.mat().norm();
        // tangent of moderate p-norm: p^{1/2} W p^{1/2}
        let w = random::sym_matrix(&mut rng, n, 1.0);
        let v = SymTangent::from_symmetrized(&(p.sqrt() * w * p.sqrt()));
        let v2 = spd::log_map(&p, &spd::exp_map(&p, &v)?)?;
        let e2 = (v2.mat() - v.mat()).norm() / v.mat().norm().max(1.0);
        worst = worst.max(e1).max(e2);
    }
    Ok(outcome("exp_log", worst <= 1e-10, count, worst, format!("largest relative round-trip error {worst:e}")))
}

/// Constant steps on d(·, q*)² in SPD(3) reach the optimum within the
/// a-priori bound.
pub fn synthetic(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut rng = random::rng(cfg.seed.wrapping_add(8));
    let set = FeasibleSet::new(1.0, OrderInterval::new(0.5, 2.0)?)?;
    let target = random::spd_in_interval(&mut rng, 3, set.interval());
    let n_iters = cfg.count(2000);
    let mut scfg = SolverConfig::with_feasible(n_iters, set, 3, 0);
    scfg.record_every = n_iters;
    let d = scfg.d_bound;
    let mut tbar = d / (n_iters as f64).sqrt();
    for _ in 0..50 {
        tbar = constant_step_optimal(d, zeta_constant(d, tbar, KAPPA_HAT), n_iters);
    }
    let trace = run(&DistanceSquared { target }, MetricParams::identity(0, 3), StepRule::Constant { tbar }, &scfg)?;
    let bound = bound_constant(0.0, trace.max_grad_norm, d, zeta_constant(d, tbar, KAPPA_HAT), tbar, n_iters);
    let passed = trace.best_value <= bound && trace.best_value < 1e-2;
    Ok(outcome(
        "synthetic_n3",
        passed,
        n_iters,
        trace.best_value,
        format!("best {:e}, bound {bound:e}", trace.best_value),
    ))
}

/// Every suite, in a fixed order.
pub fn run_all(cfg: &CheckConfig) -> Result<Vec<SuiteOutcome>> {
    let suites: [fn(&CheckConfig) -> Result<SuiteOutcome>; 9] =
        [curvature, projection, convexity, majorization, finite_differences, lipschitz, wedin, exp_log, synthetic];
    suites.iter().map(|s| s(cfg)).collect()
}
