//! Projected inexact subgradient descent on ℝᴺ × SPD(n),
//!
//! ```text
//! x_{k+1} = Proj(exp_{x_k}(−t_k v_k / ‖v_k‖)),
//! ```
//!
//! with exogenous, constant or Polyak step sizes, plus the a-priori bounds on
//! min_k f(x_k) − f* for each rule.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Evaluation, Objective};
use crate::product::{
    feasible_diameter, product_dist, product_step, project_feasible, FeasibleSet, MetricParams, ProductTangent,
    KAPPA_HAT,
};
use crate::spd::{self, SpdPoint};

/// Parameters of the Polyak rule t_k = α(f(x_k) − f* − εD)/‖v_k‖.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyakRule {
    pub alpha: f64,
    pub f_star: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum StepRule {
    /// t_k = t0/(k + 1).
    Exogenous { t0: f64 },
    Constant { tbar: f64 },
    Polyak(PolyakRule),
}

impl StepRule {
    /// Checks positivity and, for Polyak, 0 < α < 2·tanh(κ̂D)/(κ̂D).
    pub fn validate(&self, d: f64, kappa_hat: f64) -> Result<()> {
        match *self {
            StepRule::Exogenous { t0 } if !(t0 > 0.0 && t0.is_finite()) => {
                Err(Error::InvalidStepRule(format!("t0 must be positive, got {t0}")))
            }
            StepRule::Constant { tbar } if !(tbar > 0.0 && tbar.is_finite()) => {
                Err(Error::InvalidStepRule(format!("tbar must be positive, got {tbar}")))
            }
            StepRule::Polyak(r) => {
                let max = polyak_alpha_max(d, kappa_hat);
                if !(r.alpha > 0.0 && r.alpha < max) {
                    return Err(Error::InvalidStepRule(format!("alpha = {} outside (0, {max})", r.alpha)));
                }
                if !(r.epsilon >= 0.0) || !r.f_star.is_finite() {
                    return Err(Error::InvalidStepRule("epsilon must be ≥ 0 and f* finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Upper bound σ on the step sizes, where the rule determines one.
    pub fn sup_step(&self) -> Option<f64> {
        match *self {
            StepRule::Exogenous { t0 } => Some(t0),
            StepRule::Constant { tbar } => Some(tbar),
            StepRule::Polyak(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of steps; the objective is evaluated max_iters + 1 times.
    pub max_iters: usize,
    /// Set projected on after every step; `None` leaves iterates free.
    pub feasible: Option<FeasibleSet>,
    /// Diameter bound D used by the Polyak rule and the bounds.
    pub d_bound: f64,
    pub kappa_hat: f64,
    /// σ with sup_k t_k ≤ σ, for ζ in the bounds.
    pub sigma_cap: Option<f64>,
    /// Keep every `record_every`-th record (plus every new best and the last).
    pub record_every: usize,
}

impl SolverConfig {
    /// Configuration whose D is the feasible set's diameter.
    pub fn with_feasible(max_iters: usize, set: FeasibleSet, n: usize, n_coeffs: usize) -> Self {
        Self {
            max_iters,
            feasible: Some(set),
            d_bound: feasible_diameter(&set, n, n_coeffs),
            kappa_hat: KAPPA_HAT,
            sigma_cap: None,
            record_every: 1,
        }
    }

    /// Unconstrained configuration with a nominal D.
    pub fn unconstrained(max_iters: usize, d_bound: f64) -> Self {
        Self { max_iters, feasible: None, d_bound, kappa_hat: KAPPA_HAT, sigma_cap: None, record_every: 1 }
    }

    fn validate(&self, n: usize, n_coeffs: usize) -> Result<()> {
        if !(self.d_bound > 0.0 && self.d_bound.is_finite()) {
            return Err(Error::InvalidArgument(format!("D must be positive, got {}", self.d_bound)));
        }
        if !(self.kappa_hat > 0.0) {
            return Err(Error::InvalidArgument("kappa_hat must be positive".into()));
        }
        if let Some(set) = &self.feasible {
            let diam = feasible_diameter(set, n, n_coeffs);
            if self.d_bound < diam * (1.0 - 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "D = {} is below the feasible-set diameter {diam}",
                    self.d_bound
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    /// f(x_k) in bits.
    pub objective: f64,
    /// Step size t_k taken from x_k (0 on the last record).
    pub step: f64,
    /// True when the subgradient at x_k was exact (spectral gap above tolerance).
    pub gap_ok: bool,
    /// Product distance between x_k and x_{k+1}.
    pub moved: f64,
    pub best_so_far: f64,
    pub best_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    /// A zero subgradient was returned.
    Stationary,
    /// The observer asked to stop.
    Stopped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterateRecord>,
    pub best_value: f64,
    pub best_iter: usize,
    pub best_params: MetricParams,
    pub last_params: MetricParams,
    pub status: RunStatus,
    /// Number of objective evaluations.
    pub evaluations: usize,
    /// Largest subgradient norm seen.
    pub max_grad_norm: f64,
}

/// Runs the method without an observer.
pub fn run(obj: &dyn Objective, start: MetricParams, rule: StepRule, cfg: &SolverConfig) -> Result<RunTrace> {
    run_with_observer(obj, start, rule, cfg, |_, _| ControlFlow::Continue(()))
}

/// Runs the method, calling `observer` with every record (kept or not) and
/// the iterate it belongs to.
pub fn run_with_observer(
    obj: &dyn Objective,
    start: MetricParams,
    rule: StepRule,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterateRecord, &MetricParams) -> ControlFlow<()>,
) -> Result<RunTrace> {
    let (n, n_coeffs) = (obj.n(), obj.n_coeffs());
    if start.n() != n || start.n_coeffs() != n_coeffs {
        return Err(Error::DimensionMismatch { expected: n_coeffs, got: start.n_coeffs() });
    }
    cfg.validate(n, n_coeffs)?;
    rule.validate(cfg.d_bound, cfg.kappa_hat)?;
    if let Some(set) = &cfg.feasible {
        if !set.contains(&start) {
            return Err(Error::InvalidArgument("start point is not feasible".into()));
        }
    }
    let every = cfg.record_every.max(1);

    let mut x = start;
    let mut records = Vec::new();
    let mut best_value = f64::INFINITY;
    let mut best_iter = 0;
    let mut best_params = x.clone();
    let mut status = RunStatus::Completed;
    let mut evaluations = 0;
    let mut max_grad_norm: f64 = 0.0;

    for k in 0..=cfg.max_iters {
        let Evaluation { value, grad, exact } = obj.evaluate(&x)?;
        evaluations += 1;
        let new_best = value < best_value;
        if new_best {
            best_value = value;
            best_iter = k;
            best_params = x.clone();
        }
        let vnorm = grad.norm_at(&x)?;
        max_grad_norm = max_grad_norm.max(vnorm);
        let last = k == cfg.max_iters;
        let stationary = !(vnorm > 0.0);

        let (step, next) = if last || stationary {
            (0.0, None)
        } else {
            let t = step_size(&rule, k, value, cfg.d_bound, vnorm);
            (t, Some(advance(&x, t, &grad, cfg)?))
        };
        let moved = match &next {
            Some(y) => product_dist(&x, y)?,
            None => 0.0,
        };
        let rec = IterateRecord { k, objective: value, step, gap_ok: exact, moved, best_so_far: best_value, best_iter };
        if k % every == 0 || new_best || last || stationary {
            records.push(rec);
        }
        if observer(&rec, &x).is_break() {
            status = RunStatus::Stopped;
            break;
        }
        if stationary {
            status = RunStatus::Stationary;
            break;
        }
        if let Some(y) = next {
            x = y;
        }
    }
    Ok(RunTrace { records, best_value, best_iter, best_params, last_params: x, status, evaluations, max_grad_norm })
}

fn step_size(rule: &StepRule, k: usize, f: f64, d: f64, vnorm: f64) -> f64 {
    match rule {
        StepRule::Exogenous { t0 } => t0 / (k + 1) as f64,
        StepRule::Constant { tbar } => *tbar,
        // Negative Polyak steps are clamped to zero.
        StepRule::Polyak(r) => polyak_step(f, r, d, vnorm).max(0.0),
    }
}

fn advance(x: &MetricParams, t: f64, grad: &ProductTangent, cfg: &SolverConfig) -> Result<MetricParams> {
    if t == 0.0 {
        return Ok(x.clone());
    }
    let y = product_step(x, t, grad)?;
    Ok(match &cfg.feasible {
        Some(set) => project_feasible(&y, set),
        None => y,
    })
}

/// ζ = D·sinh(κ̂σ)/(σ·tanh(κ̂D)).
pub fn zeta_constant(d: f64, sigma: f64, kappa_hat: f64) -> f64 {
    d * (kappa_hat * sigma).sinh() / (sigma * (kappa_hat * d).tanh())
}

/// t̄ = D/√(ζN).
pub fn constant_step_optimal(d: f64, zeta: f64, n_iters: usize) -> f64 {
    d / (zeta * n_iters as f64).sqrt()
}

/// α(f(x_k) − f* − εD)/‖v_k‖, unclamped.
pub fn polyak_step(f: f64, rule: &PolyakRule, d: f64, v_norm: f64) -> f64 {
    rule.alpha * (f - rule.f_star - rule.epsilon * d) / v_norm
}

/// Supremum 2·tanh(κ̂D)/(κ̂D) of admissible Polyak α.
pub fn polyak_alpha_max(d: f64, kappa_hat: f64) -> f64 {
    2.0 * (kappa_hat * d).tanh() / (kappa_hat * d)
}

/// (ε+ι)(D² + ζΣt_k²)/(2Σt_k).
pub fn bound_exogenous(eps: f64, iota: f64, d: f64, zeta: f64, steps: &[f64]) -> f64 {
    let s1: f64 = steps.iter().sum();
    let s2: f64 = steps.iter().map(|t| t * t).sum();
    (eps + iota) * (d * d + zeta * s2) / (2.0 * s1)
}

/// (ε+ι)(D² + ζNt̄²)/(2Nt̄).
pub fn bound_constant(eps: f64, iota: f64, d: f64, zeta: f64, tbar: f64, n_iters: usize) -> f64 {
    let n = n_iters as f64;
    (eps + iota) * (d * d + zeta * n * tbar * tbar) / (2.0 * n * tbar)
}

/// Γ = (2α − κ̂D/tanh(κ̂D)·α²)/((ε+ι)²D²).
pub fn polyak_gamma(eps: f64, iota: f64, d: f64, alpha: f64, kappa_hat: f64) -> f64 {
    let c = kappa_hat * d / (kappa_hat * d).tanh();
    (2.0 * alpha - c * alpha * alpha) / ((eps + iota).powi(2) * d * d)
}

/// 1/√(ΓN); requires Γ > 0.
pub fn bound_polyak(eps: f64, iota: f64, d: f64, alpha: f64, kappa_hat: f64, n_iters: usize) -> Result<f64> {
    let gamma = polyak_gamma(eps, iota, d, alpha, kappa_hat);
    if !(gamma > 0.0) {
        return Err(Error::InvalidStepRule(format!("alpha = {alpha} gives non-positive Γ = {gamma}")));
    }
    Ok(1.0 / (gamma * n_iters as f64).sqrt())
}

/// f(p) = d(p, q*)² on SPD(n) with gradient −2·log_p q*; a test problem
/// with known minimum 0 at q*.
#[derive(Debug, Clone)]
pub struct DistanceSquared {
    pub target: SpdPoint,
}

impl Objective for DistanceSquared {
    fn n_coeffs(&self) -> usize {
        0
    }

    fn n(&self) -> usize {
        self.target.dim()
    }

    fn evaluate(&self, params: &MetricParams) -> Result<Evaluation> {
        let log = spd::log_map(&params.p, &self.target)?;
        let d = spd::norm(&params.p, &log)?;
        let grad = ProductTangent { da: params.a.clone(), dp: log.scale(-2.0) };
        Ok(Evaluation { value: d * d, grad, exact: true })
    }
}
