//! Standard losses, each paired with the PDG whose inconsistency equals it.
//!
//! A constructor evaluates the loss by its usual formula (`direct`), builds
//! the PDG, solves for its inconsistency, and records the additive constant
//! relating the two. The relation is checked on the corrected quantity
//! `scale · inconsistency + correction`.

mod classic;
mod dataset;
mod reverse;
mod scenario;
mod variational;

use serde::Serialize;

pub use classic::{
    accuracy, cross_entropy, marginal_nll, marginal_nll_dataset, mse, regularized, supervised_ce, surprisal,
    CROSS_ENTROPY_GAMMAS,
};
pub use dataset::Dataset;
pub use reverse::{expected_cost, expected_cost_soft, supervised_limit, supervised_limit_sweep, SUPERVISED_LIMIT_TOLERANCE};
pub use scenario::{l3_optimal_predictor, scenario_losses, ScenarioLosses, L2_TOLERANCE};
pub use variational::{elbo, vae_elbo, vae_elbo_dataset};

use crate::error::Result;
use crate::model::{Cpd, Edge, JointTable, Pdg, Variable};
use crate::score::Score;
use crate::solver::{min_gamma_score, FamilyKind, SolveOptions, SolveResult};

/// Default tolerance on `|direct − (scale · inconsistency + correction)|`.
pub const LOSS_TOLERANCE: f64 = 1e-5;

/// How `direct` relates to the corrected inconsistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equal,
    /// `direct ≤ corrected inconsistency`, with equality only at an optimum.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    fn close(name: impl Into<String>, lhs: Score, rhs: Score, tol: f64) -> Check {
        let d = lhs.distance(rhs);
        Check::new(name, d <= tol, format!("{lhs} vs {rhs} (|Δ| = {d:.3e}, tol {tol:e})"))
    }

    fn at_most(name: impl Into<String>, lhs: Score, rhs: Score, slack: f64) -> Check {
        let ok = lhs.value() <= rhs.value() + slack || rhs.is_infinite();
        Check::new(name, ok, format!("{lhs} ≤ {rhs}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub family: FamilyKind,
}

impl From<&SolveResult> for SolverSummary {
    fn from(r: &SolveResult) -> Self {
        SolverSummary { iterations: r.iterations, converged: r.converged, restarts_used: r.restarts_used, family: r.family }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub name: String,
    /// `None` when the value comes from a closed form over continuous variables.
    pub pdg: Option<Pdg>,
    pub gamma: f64,
    pub direct: Score,
    pub inconsistency: Score,
    pub scale: f64,
    pub correction: Score,
    pub relation: Relation,
    pub tolerance: f64,
    pub checks: Vec<Check>,
    /// Other quantities worth reporting, such as values at other `γ`.
    pub extras: Vec<(String, Score)>,
    pub solver: Option<SolverSummary>,
}

impl LossReport {
    fn new(name: &str, pdg: Option<Pdg>, direct: Score, inconsistency: Score) -> LossReport {
        LossReport {
            name: name.to_string(),
            pdg,
            gamma: 0.0,
            direct,
            inconsistency,
            scale: 1.0,
            correction: Score::ZERO,
            relation: Relation::Equal,
            tolerance: LOSS_TOLERANCE,
            checks: Vec::new(),
            extras: Vec::new(),
            solver: None,
        }
    }

    fn solved(name: &str, pdg: Pdg, gamma: f64, direct: Score, opts: &SolveOptions) -> Result<(LossReport, SolveResult)> {
        let result = min_gamma_score(&pdg, gamma, opts)?;
        let mut report = LossReport::new(name, Some(pdg), direct, result.inconsistency);
        report.gamma = gamma;
        report.solver = Some(SolverSummary::from(&result));
        Ok((report, result))
    }

    fn with_correction(mut self, correction: f64) -> LossReport {
        self.correction = Score::nats(correction);
        self
    }

    /// `scale · inconsistency + correction`.
    pub fn predicted(&self) -> Score {
        if self.inconsistency.is_infinite() {
            return Score::INFINITE;
        }
        Score::nats(self.scale * self.inconsistency.value() + self.correction.value())
    }

    pub fn discrepancy(&self) -> f64 {
        match self.relation {
            Relation::Equal => self.direct.distance(self.predicted()),
            Relation::LowerBound => (self.direct.value() - self.predicted().value()).max(0.0),
        }
    }

    /// The stated relation holds within tolerance and every check passed.
    pub fn holds(&self) -> bool {
        self.discrepancy() <= self.tolerance && self.checks.iter().all(|c| c.passed)
    }
}

pub(crate) fn single_target(cpd: &Cpd, what: &str) -> Result<Variable> {
    if !cpd.is_unconditional() || cpd.targets().len() != 1 {
        return Err(crate::Error::ShapeMismatch(format!("{what} must be an unconditional cpd over one variable")));
    }
    Ok(cpd.targets()[0].clone())
}

/// The hard observation `var = value`, labelled `var=value`.
pub(crate) fn event(var: &Variable, value: &str) -> Result<Edge> {
    Ok(Edge::new(format!("{}={}", var.name(), value), Cpd::point_mass(var, value)?).hard())
}

/// `−ln p`, with `−ln 0 = ∞`.
pub(crate) fn surprise(p: f64) -> f64 {
    if p > 0.0 {
        -p.ln()
    } else {
        f64::INFINITY
    }
}

/// `H_μ(targets | sources)`.
pub(crate) fn conditional_entropy(mu: &JointTable, targets: &[&str], sources: &[&str]) -> Result<f64> {
    let mut all: Vec<&str> = sources.to_vec();
    all.extend(targets);
    let joint = mu.marginal(&all)?.entropy();
    let src = if sources.is_empty() { 0.0 } else { mu.marginal(sources)?.entropy() };
    Ok(joint - src)
}

fn names(vars: &[Variable]) -> Vec<&str> {
    vars.iter().map(Variable::name).collect()
}
