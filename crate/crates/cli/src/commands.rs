use metricopt::check::{run_all, CheckConfig, SubgradFn, SuiteOutcome};
use metricopt::estimators::{dimension_scan, restoration_entropy_estimate, DimensionScanResult, MetricReport};
use metricopt::objective::{lipschitz_constant, ObjectiveIndex};
use metricopt::product::KAPPA_HAT;
use metricopt::solver::{
    bound_constant, bound_exogenous, bound_polyak, polyak_alpha_max, polyak_gamma, zeta_constant, RunStatus,
    StepRule,
};
use metricopt::system::{window_points, ParamWindow};
use serde::Serialize;

use crate::config::{RuleName, RunConfig};
use crate::output;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct EntropySummary {
    pub bound: f64,
    pub bound_iter: usize,
    pub initial: f64,
    pub evaluations: usize,
    pub status: RunStatus,
    pub report: MetricReport,
}

/// Minimizes the restoration objective and writes trace.jsonl, best.csv,
/// report.json and report.txt to the output directory.
pub fn cmd_entropy(cfg: &RunConfig) -> Result<EntropySummary, CliError> {
    let setup = cfg.setup(ObjectiveIndex::Restoration)?;
    let (report, trace) = restoration_entropy_estimate(&setup.problem, &setup.solver, setup.rule)?;
    let dir = &cfg.run.output_dir;
    output::write_trace(dir, &trace.records)?;
    output::write_best_csv(dir, &trace.records)?;
    output::write_report(dir, &report)?;
    Ok(EntropySummary {
        bound: report.bound,
        bound_iter: report.bound_iter,
        initial: trace.records.first().map_or(f64::NAN, |r| r.objective),
        evaluations: trace.evaluations,
        status: trace.status,
        report,
    })
}

/// Scans s for the Lyapunov dimension bound k + s and writes dimension.csv.
pub fn cmd_dimension(cfg: &RunConfig, k: usize, s_values: &[f64]) -> Result<DimensionScanResult, CliError> {
    if s_values.is_empty() {
        return Err(CliError::Config("at least one s value is required".into()));
    }
    if let Some(bad) = s_values.iter().find(|s| !(0.0..1.0).contains(*s)) {
        return Err(CliError::Config(format!("s = {bad} outside [0, 1)")));
    }
    let setup = cfg.setup(ObjectiveIndex::fractional(k, s_values[0], 2).map_err(|e| CliError::Config(e.to_string()))?)?;
    let res = dimension_scan(&setup.problem, k, s_values, &setup.solver, setup.rule)?;
    output::write_dimension_csv(&cfg.run.output_dir, &res)?;
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSummary {
    pub d: f64,
    pub kappa_hat: f64,
    pub iters: usize,
    pub epsilon: f64,
    /// ι = √n/ln 2 plus the largest a-gradient norm over the grid.
    pub iota: f64,
    pub t0: f64,
    pub zeta_exogenous: f64,
    pub tbar: f64,
    pub zeta_constant: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub bound_exogenous: f64,
    pub bound_constant: f64,
    pub bound_polyak: f64,
}

/// Evaluates the three a-priori bounds for the configured budget.
pub fn cmd_bound(cfg: &RunConfig) -> Result<BoundSummary, CliError> {
    let setup = cfg.setup(ObjectiveIndex::Restoration)?;
    let d = setup.solver.d_bound;
    let n = cfg.map()?.dim();
    let iters = cfg.run.iters.max(1);
    let eps = cfg.step.epsilon;

    // The a-part of a restoration subgradient is at most n/(2 ln 2)·‖m(φx) − m(x)‖.
    let map = cfg.map()?;
    let pts = window_points(&setup.region, &ParamWindow::unit(cfg.grid.m));
    let mut a_max: f64 = 0.0;
    for x in &pts {
        let mx = setup.basis.coeff_gradient(x)?;
        let mfx = setup.basis.coeff_gradient(&map.eval(x))?;
        let norm = mfx.iter().zip(&mx).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        a_max = a_max.max(norm);
    }
    let iota = lipschitz_constant(n) + n as f64 / (2.0 * std::f64::consts::LN_2) * a_max;

    let t0 = cfg.step.t0;
    let steps: Vec<f64> = (0..iters).map(|k| t0 / (k + 1) as f64).collect();
    let zeta_ex = zeta_constant(d, t0, KAPPA_HAT);
    let tbar = cfg.step.tbar.unwrap_or_else(|| RunConfig::optimal_tbar(d, iters));
    let zeta_c = zeta_constant(d, tbar, KAPPA_HAT);

    let alpha = match setup.rule {
        StepRule::Polyak(r) => r.alpha,
        _ => {
            let mut polyak = cfg.clone();
            polyak.step.rule = RuleName::Polyak;
            match polyak.step_rule(d)? {
                StepRule::Polyak(r) => r.alpha,
                _ => unreachable!(),
            }
        }
    };
    if !(alpha < polyak_alpha_max(d, KAPPA_HAT)) {
        return Err(CliError::Config(format!("alpha {alpha} outside the admissible range")));
    }
    Ok(BoundSummary {
        d,
        kappa_hat: KAPPA_HAT,
        iters,
        epsilon: eps,
        iota,
        t0,
        zeta_exogenous: zeta_ex,
        tbar,
        zeta_constant: zeta_c,
        alpha,
        gamma: polyak_gamma(eps, iota, d, alpha, KAPPA_HAT),
        bound_exogenous: bound_exogenous(eps, iota, d, zeta_ex, &steps),
        bound_constant: bound_constant(eps, iota, d, zeta_c, tbar, iters),
        bound_polyak: bound_polyak(eps, iota, d, alpha, KAPPA_HAT, iters)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub seed: u64,
    pub passed: bool,
    pub failed: Vec<&'static str>,
    pub suites: Vec<SuiteOutcome>,
}

/// Runs the property suites with sample counts multiplied by `scale`.
pub fn cmd_check(cfg: &RunConfig, scale: f64, subgrad: Option<SubgradFn>) -> Result<CheckSummary, CliError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Config(format!("scale must be positive, got {scale}")));
    }
    let mut check = CheckConfig { seed: cfg.run.seed, scale, ..CheckConfig::default() };
    if let Some(f) = subgrad {
        check.subgrad = f;
    }
    let suites = run_all(&check)?;
    let failed: Vec<&'static str> = suites.iter().filter(|s| !s.passed).map(|s| s.name).collect();
    Ok(CheckSummary { seed: cfg.run.seed, passed: failed.is_empty(), failed, suites })
}
