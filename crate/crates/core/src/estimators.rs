//! Upper bounds on the Lyapunov dimension and the restoration entropy, and
//! the report describing the metric that attains a bound.

use std::fmt::Write as _;
use std::ops::ControlFlow;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{ObjectiveIndex, SingularValueProblem};
use crate::poly::MonomialBasis;
use crate::product::{project_feasible, MetricParams};
use crate::solver::{run, run_with_observer, RunTrace, SolverConfig, StepRule};
use crate::spd::SpdPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub s: f64,
    /// First iteration whose grid maximum of Σ_{k+s} was negative.
    pub first_negative_iter: Option<usize>,
    pub value_at_first_negative: Option<f64>,
    /// Smallest value seen (equal to the negative value when the run stopped).
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionScanResult {
    pub k: usize,
    /// Sorted by s, largest first.
    pub rows: Vec<ScanRow>,
    /// k + the smallest s that reached a negative value.
    pub best_bound: Option<f64>,
}

/// The metric P = e^{r_a} p at the start of every run: a = 0, p = I, moved
/// into the feasible set if one is configured.
pub fn start_params(n_coeffs: usize, n: usize, cfg: &SolverConfig) -> MetricParams {
    let id = MetricParams::identity(n_coeffs, n);
    match &cfg.feasible {
        Some(set) => project_feasible(&id, set),
        None => id,
    }
}

/// For each s, minimizes max_x J_{k+s,x} from the identity metric and
/// records the first iteration at which the maximum drops below zero; the run
/// stops there. A negative maximum certifies dim_L ≤ k + s on the region.
pub fn dimension_scan(
    problem: &SingularValueProblem,
    k: usize,
    s_values: &[f64],
    cfg: &SolverConfig,
    rule: StepRule,
) -> Result<DimensionScanResult> {
    let n = problem.map().dim();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be below n = {n}")));
    }
    if s_values.is_empty() {
        return Err(Error::InvalidArgument("no s values given".into()));
    }
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let prob = problem.with_index(ObjectiveIndex::fractional(k, s, n)?)?;
        let start = start_params(problem.basis().size(), n, cfg);
        let mut hit = None;
        let trace = run_with_observer(&prob, start, rule, cfg, |rec, _| {
            if rec.objective < 0.0 {
                hit = Some((rec.k, rec.objective));
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        rows.push(ScanRow {
            s,
            first_negative_iter: hit.map(|h| h.0),
            value_at_first_negative: hit.map(|h| h.1),
            best_value: trace.best_value,
        });
    }
    rows.sort_by(|a, b| b.s.total_cmp(&a.s));
    let best_bound = rows
        .iter()
        .filter(|r| r.first_negative_iter.is_some())
        .map(|r| r.s)
        .min_by(f64::total_cmp)
        .map(|s| k as f64 + s);
    Ok(DimensionScanResult { k, rows, best_bound })
}

/// Minimizes max_x max_{0≤k≤n} J_{k,x} from the identity metric; the best
/// value is an upper bound on the restoration entropy over the region.
pub fn restoration_entropy_estimate(
    problem: &SingularValueProblem,
    cfg: &SolverConfig,
    rule: StepRule,
) -> Result<(MetricReport, RunTrace)> {
    let prob = match problem.index() {
        ObjectiveIndex::Restoration => None,
        _ => Some(problem.with_index(ObjectiveIndex::Restoration)?),
    };
    let prob = prob.as_ref().unwrap_or(problem);
    let start = start_params(prob.basis().size(), prob.map().dim(), cfg);
    let trace = run(prob, start, rule, cfg)?;
    let report = emit_metric_report(&trace.best_params, trace.best_value, trace.best_iter, prob.basis());
    Ok((report, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCoeff {
    pub term: String,
    pub value: f64,
}

/// A metric P = e^{r_a} p with the bound it attains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub degree: usize,
    /// Rows of p.
    pub p: Vec<Vec<f64>>,
    pub coefficients: Vec<LabeledCoeff>,
    pub bound: f64,
    pub bound_iter: usize,
    pub norm_a: f64,
    pub eig_p_min: f64,
    pub eig_p_max: f64,
}

pub fn emit_metric_report(params: &MetricParams, bound: f64, iter: usize, basis: &MonomialBasis) -> MetricReport {
    let n = params.n();
    let m = params.p.mat();
    MetricReport {
        n,
        degree: basis.degree(),
        p: (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect(),
        coefficients: basis
            .term_labels()
            .into_iter()
            .zip(params.a.iter())
            .map(|(term, &value)| LabeledCoeff { term, value })
            .collect(),
        bound,
        bound_iter: iter,
        norm_a: params.a.norm(),
        eig_p_min: params.p.min_eigenvalue(),
        eig_p_max: params.p.max_eigenvalue(),
    }
}

impl MetricReport {
    /// The metric parameters described by the report.
    pub fn to_params(&self) -> Result<MetricParams> {
        if self.p.len() != self.n || self.p.iter().any(|r| r.len() != self.n) {
            return Err(Error::InvalidArgument("p must be an n×n matrix".into()));
        }
        let p = DMatrix::from_fn(self.n, self.n, |i, j| self.p[i][j]);
        let a = DVector::from_iterator(self.coefficients.len(), self.coefficients.iter().map(|c| c.value));
        Ok(MetricParams::new(a, SpdPoint::new(p)?))
    }

    /// Plain-text table: the bound, p, its eigenvalues, ‖a‖ and the
    /// coefficients of r_a by term.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "bound        {:.16}", self.bound);
        let _ = writeln!(s, "iteration    {}", self.bound_iter);
        let _ = writeln!(s, "p");
        for row in &self.p {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>22.16}")).collect();
            let _ = writeln!(s, "  {}", cells.join(" "));
        }
        let _ = writeln!(s, "eig(p)       {:.16}  {:.16}", self.eig_p_min, self.eig_p_max);
        let _ = writeln!(s, "|a|          {:.16}", self.norm_a);
        let _ = writeln!(s, "r_a (degree {})", self.degree);
        for c in &self.coefficients {
            let _ = writeln!(s, "  {:<10} {:>22.16}", c.term, c.value);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Domain;
    use crate::product::FeasibleSet;
    use crate::random;
    use crate::spd::OrderInterval;
    use crate::system::{henon_region, GridSpec, Henon};
    use rand::Rng;
    use std::sync::Arc;

    fn problem(m: usize, degree: usize, idx: ObjectiveIndex) -> SingularValueProblem {
        SingularValueProblem::on_region(
            Arc::new(Henon::default()),
            henon_region(),
            GridSpec::new(m, true).unwrap(),
            MonomialBasis::new(2, degree).unwrap(),
            idx,
        )
        .unwrap()
    }

    #[test]
    fn identity_report() {
        let basis = MonomialBasis::new(2, 4).unwrap();
        let r = emit_metric_report(&MetricParams::identity(14, 2), 1.5, 0, &basis);
        assert!(r.coefficients.iter().all(|c| c.value == 0.0));
        assert_eq!(r.coefficients.iter().map(|c| c.term.clone()).collect::<Vec<_>>(), basis.term_labels());
        assert_eq!((r.eig_p_min, r.eig_p_max, r.norm_a), (1.0, 1.0, 0.0));
        assert!(r.to_table().contains("x^2y^2"));
    }

    #[test]
    fn report_round_trip_reproduces_bound() {
        let prob = problem(40, 4, ObjectiveIndex::Restoration);
        let mut rng = random::rng(40);
        let params = MetricParams::new(
            DVector::from_fn(14, |_, _| rng.random_range(-0.1..0.1)),
            random::spd(&mut rng, 2, 0.4),
        );
        let value = prob.maximize(&params).unwrap().value;
        let report = emit_metric_report(&params, value, 7, prob.basis());
        let json = serde_json::to_string(&report).unwrap();
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        let again = prob.maximize(&back.to_params().unwrap()).unwrap().value;
        assert!((again - value).abs() < 1e-12);
    }

    #[test]
    fn scan_reports_iteration_zero_when_already_negative() {
        let prob = problem(30, 2, ObjectiveIndex::Restoration);
        let cfg = SolverConfig::unconstrained(5, 10.0);
        let res = dimension_scan(&prob, 1, &[0.5, 0.95, 0.9], &cfg, StepRule::Exogenous { t0: 1.0 }).unwrap();
        assert_eq!(res.rows.iter().map(|r| r.s).collect::<Vec<_>>(), vec![0.95, 0.9, 0.5]);
        assert_eq!(res.rows[0].first_negative_iter, Some(0));
        assert!(res.rows[0].value_at_first_negative.unwrap() < 0.0);
        assert_eq!(res.best_bound, Some(1.9));
        assert!(dimension_scan(&prob, 1, &[], &cfg, StepRule::Exogenous { t0: 1.0 }).is_err());
        assert!(dimension_scan(&prob, 2, &[0.1], &cfg, StepRule::Exogenous { t0: 1.0 }).is_err());
    }

    #[test]
    fn sigma_in_s_is_affine() {
        let prob = problem(20, 2, ObjectiveIndex::Restoration);
        let mut rng = random::rng(41);
        let params = MetricParams::new(
            DVector::from_fn(5, |_, _| rng.random_range(-0.2..0.2)),
            random::spd(&mut rng, 2, 0.4),
        );
        let at = |k, s| {
            prob.with_index(ObjectiveIndex::fractional(k, s, 2).unwrap()).unwrap().value_at(&params, &[0.3, -0.2]).unwrap().0
        };
        let (s1, s2) = (at(1, 0.0), at(2, 0.0));
        for s in [0.1, 0.45, 0.9] {
            assert!((at(1, s) - (s1 + s * (s2 - s1))).abs() < 1e-12);
        }
    }

    #[test]
    fn restoration_estimate_improves_and_stays_nonnegative() {
        let prob = problem(40, 2, ObjectiveIndex::fractional(1, 0.0, 2).unwrap());
        let set = FeasibleSet::new(1.5, OrderInterval::new(0.5, 2.0).unwrap()).unwrap();
        let cfg = SolverConfig::with_feasible(60, set, 2, 5);
        let (report, trace) = restoration_entropy_estimate(&prob, &cfg, StepRule::Exogenous { t0: 1.0 }).unwrap();
        assert!(report.bound >= 0.0);
        assert!(report.bound <= trace.records[0].objective);
        assert!(report.bound < trace.records[0].objective - 0.05);
        assert_eq!(report.bound, trace.best_value);
        let restoration = prob.with_index(ObjectiveIndex::Restoration).unwrap();
        let again = restoration.maximize(&report.to_params().unwrap()).unwrap().value;
        assert!((again - report.bound).abs() < 1e-12);
    }

    #[test]
    fn points_domain_scan() {
        let pts = vec![vec![0.1, 0.2], vec![-0.5, 0.4]];
        let prob = SingularValueProblem::new(
            Arc::new(Henon::default()),
            Domain::Points(pts),
            MonomialBasis::new(2, 1).unwrap(),
            ObjectiveIndex::Restoration,
        )
        .unwrap();
        let cfg = SolverConfig::unconstrained(3, 5.0);
        let res = dimension_scan(&prob, 1, &[0.99], &cfg, StepRule::Exogenous { t0: 0.1 }).unwrap();
        assert_eq!(res.rows[0].first_negative_iter, Some(0));
    }
}
