//! Run configuration: a TOML document whose every key has a default, plus
//! command-line overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use metricopt::objective::{ObjectiveIndex, SingularValueProblem};
use metricopt::poly::MonomialBasis;
use metricopt::product::{feasible_diameter, FeasibleSet, KAPPA_HAT};
use metricopt::solver::{
    constant_step_optimal, polyak_alpha_max, zeta_constant, PolyakRule, SolverConfig, StepRule,
};
use metricopt::spd::OrderInterval;
use metricopt::system::{henon, henon_region, GridSpec, QuadRegion, SmoothMap};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub basis: BasisSection,
    pub grid: GridSection,
    pub feasible: FeasibleSection,
    pub step: StepSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub name: String,
    /// Map parameters; (a, b) for the Hénon map.
    pub params: Vec<f64>,
    /// Region corners A, B, C, D. Optional only for the standard Hénon map.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corners: Option<[[f64; 2]; 4]>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { name: "henon".into(), params: vec![1.4, 0.3], corners: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub degree: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self { degree: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub m: usize,
    pub refine: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { m: 1000, refine: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeasibleSection {
    /// Project after every step. Without projection the set only fixes D.
    pub project: bool,
    pub ball_radius: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for FeasibleSection {
    fn default() -> Self {
        Self { project: false, ball_radius: 1.5, alpha: 0.5, beta: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    Exogenous,
    Constant,
    Polyak,
}

impl std::str::FromStr for RuleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exogenous" => Ok(Self::Exogenous),
            "constant" => Ok(Self::Constant),
            "polyak" => Ok(Self::Polyak),
            _ => Err(format!("unknown step rule '{s}' (exogenous, constant, polyak)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepSection {
    pub rule: RuleName,
    pub t0: f64,
    /// Constant step; the optimal D/√(ζN) when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tbar: Option<f64>,
    /// Polyak α as a multiple of tanh(κ̂D)/(κ̂D); admissible below 2.
    pub alpha_factor: f64,
    pub f_star: f64,
    pub epsilon: f64,
    /// Diameter bound D; the feasible-set diameter when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_override: Option<f64>,
}

impl Default for StepSection {
    fn default() -> Self {
        Self {
            rule: RuleName::Exogenous,
            t0: 16.0,
            tbar: None,
            alpha_factor: 1.0,
            f_star: 1.3,
            epsilon: 0.0,
            d_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub iters: usize,
    pub record_every: usize,
    pub output_dir: PathBuf,
    /// Seed for the property suites.
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { iters: 1000, record_every: 100, output_dir: PathBuf::from("out"), seed: 20240611 }
    }
}

/// Values given on the command line; `None` keeps the configured value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub iters: Option<usize>,
    pub degree: Option<usize>,
    pub grid: Option<usize>,
    pub no_refine: bool,
    pub step_rule: Option<RuleName>,
    pub t0: Option<f64>,
    pub tbar: Option<f64>,
    pub alpha_factor: Option<f64>,
    pub f_star: Option<f64>,
    pub epsilon: Option<f64>,
    pub ball_radius: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub output: Option<PathBuf>,
    pub project: Option<bool>,
    pub record_every: Option<usize>,
    pub seed: Option<u64>,
}

/// Everything a command needs, built from a validated configuration.
pub struct Setup {
    pub problem: SingularValueProblem,
    pub solver: SolverConfig,
    pub rule: StepRule,
    pub set: FeasibleSet,
    pub region: QuadRegion,
    pub basis: MonomialBasis,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.iters {
            self.run.iters = v;
        }
        if let Some(v) = o.degree {
            self.basis.degree = v;
        }
        if let Some(v) = o.grid {
            self.grid.m = v;
        }
        if o.no_refine {
            self.grid.refine = false;
        }
        if let Some(v) = o.step_rule {
            self.step.rule = v;
        }
        if let Some(v) = o.t0 {
            self.step.t0 = v;
        }
        if let Some(v) = o.tbar {
            self.step.tbar = Some(v);
        }
        if let Some(v) = o.alpha_factor {
            self.step.alpha_factor = v;
        }
        if let Some(v) = o.f_star {
            self.step.f_star = v;
        }
        if let Some(v) = o.epsilon {
            self.step.epsilon = v;
        }
        if let Some(v) = o.ball_radius {
            self.feasible.ball_radius = v;
        }
        if let Some((a, b)) = o.interval {
            self.feasible.alpha = a;
            self.feasible.beta = b;
        }
        if let Some(v) = &o.output {
            self.run.output_dir = v.clone();
        }
        if let Some(v) = o.project {
            self.feasible.project = v;
        }
        if let Some(v) = o.record_every {
            self.run.record_every = v;
        }
        if let Some(v) = o.seed {
            self.run.seed = v;
        }
    }

    pub fn map(&self) -> Result<Arc<dyn SmoothMap>, CliError> {
        match self.system.name.as_str() {
            "henon" => match self.system.params.as_slice() {
                &[a, b] if a.is_finite() && b.is_finite() && b != 0.0 => Ok(Arc::new(henon(a, b))),
                _ => Err(CliError::Config("henon needs params = [a, b] with b ≠ 0".into())),
            },
            other => Err(CliError::Config(format!("unknown system '{other}'"))),
        }
    }

    pub fn region(&self) -> Result<QuadRegion, CliError> {
        match self.system.corners {
            Some(c) => Ok(QuadRegion::new(c)?),
            None if self.system.name == "henon" && self.system.params == [1.4, 0.3] => Ok(henon_region()),
            None => Err(CliError::Config("system.corners is required for a non-standard system".into())),
        }
    }

    pub fn feasible_set(&self) -> Result<FeasibleSet, CliError> {
        let f = &self.feasible;
        Ok(FeasibleSet::new(f.ball_radius, OrderInterval::new(f.alpha, f.beta)?)?)
    }

    /// D: the override, else the diameter of the feasible set.
    pub fn diameter(&self, n: usize, n_coeffs: usize) -> Result<f64, CliError> {
        let set = self.feasible_set()?;
        match self.step.d_override {
            Some(d) if !(d > 0.0 && d.is_finite()) => Err(CliError::Config(format!("d_override must be positive, got {d}"))),
            Some(d) => Ok(d),
            None => Ok(feasible_diameter(&set, n, n_coeffs)),
        }
    }

    /// Constant step t̄ = D/√(ζ(t̄)N), solved by fixed-point iteration.
    pub fn optimal_tbar(d: f64, iters: usize) -> f64 {
        let n = iters.max(1);
        let mut t = d / (n as f64).sqrt();
        for _ in 0..100 {
            t = constant_step_optimal(d, zeta_constant(d, t, KAPPA_HAT), n);
        }
        t
    }

    pub fn step_rule(&self, d: f64) -> Result<StepRule, CliError> {
        let s = &self.step;
        let rule = match s.rule {
            RuleName::Exogenous => StepRule::Exogenous { t0: s.t0 },
            RuleName::Constant => StepRule::Constant { tbar: s.tbar.unwrap_or_else(|| Self::optimal_tbar(d, self.run.iters)) },
            RuleName::Polyak => StepRule::Polyak(PolyakRule {
                alpha: s.alpha_factor * polyak_alpha_max(d, KAPPA_HAT) / 2.0,
                f_star: s.f_star,
                epsilon: s.epsilon,
            }),
        };
        rule.validate(d, KAPPA_HAT)?;
        Ok(rule)
    }

    /// Validates the whole configuration and builds the problem for `index`.
    pub fn setup(&self, index: ObjectiveIndex) -> Result<Setup, CliError> {
        let map = self.map()?;
        let region = self.region()?;
        let n = map.dim();
        let basis = MonomialBasis::new(n, self.basis.degree)?;
        let grid = GridSpec::new(self.grid.m, self.grid.refine)?;
        let set = self.feasible_set()?;
        let d = self.diameter(n, basis.size())?;
        let rule = self.step_rule(d)?;
        if self.run.record_every == 0 {
            return Err(CliError::Config("run.record_every must be at least 1".into()));
        }
        let mut solver = if self.feasible.project {
            let diam = feasible_diameter(&set, n, basis.size());
            if d < diam * (1.0 - 1e-12) {
                return Err(CliError::Config(format!("d_override {d} is below the feasible-set diameter {diam}")));
            }
            SolverConfig { d_bound: d, ..SolverConfig::with_feasible(self.run.iters, set, n, basis.size()) }
        } else {
            SolverConfig::unconstrained(self.run.iters, d)
        };
        solver.sigma_cap = rule.sup_step();
        solver.record_every = self.run.record_every;
        let problem = SingularValueProblem::on_region(map, region, grid, basis.clone(), index)?;
        Ok(Setup { problem, solver, rule, set, region, basis })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = RunConfig::default();
        assert_eq!(c.basis.degree, 4);
        assert_eq!(c.grid.m, 1000);
        assert_eq!(c.step.t0, 16.0);
        assert_eq!(c.step.rule, RuleName::Exogenous);
        assert_eq!(c.region().unwrap(), henon_region());
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("[grid]\nsize = 3\n"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_toml("[step]\nrule = \"newton\"\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn custom_parameters_need_corners() {
        let c = RunConfig::from_toml("[system]\nparams = [1.2, 0.3]\n").unwrap();
        assert!(matches!(c.region(), Err(CliError::Config(_))));
        let with = RunConfig::from_toml(
            "[system]\nparams = [1.2, 0.3]\ncorners = [[-2.0, 2.0], [2.0, 1.0], [2.0, -1.0], [-2.0, -2.0]]\n",
        )
        .unwrap();
        assert!(with.region().is_ok());
    }

    #[test]
    fn overrides_apply() {
        let mut c = RunConfig::default();
        c.apply(&Overrides {
            iters: Some(7),
            grid: Some(50),
            interval: Some((1.5, 2.0)),
            project: Some(true),
            step_rule: Some(RuleName::Polyak),
            ..Overrides::default()
        });
        assert_eq!((c.run.iters, c.grid.m, c.feasible.alpha, c.feasible.beta), (7, 50, 1.5, 2.0));
        assert!(c.feasible.project);
        assert_eq!(c.step.rule, RuleName::Polyak);
    }

    #[test]
    fn polyak_factor_range() {
        let mut c = RunConfig::default();
        c.step.rule = RuleName::Polyak;
        c.step.alpha_factor = 1.5;
        assert!(c.step_rule(3.0).is_ok());
        c.step.alpha_factor = 2.0;
        assert!(matches!(c.step_rule(3.0), Err(CliError::Core(_))));
    }
}
