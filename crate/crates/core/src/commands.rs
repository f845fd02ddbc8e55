//! Loss dispatch from documents, and the versioned report format shared by
//! the command-line tool and the test suites.
//!
//! A document names the ingredients of a loss by convention: `p`, `q`, `h`,
//! `f`, `e`, `d`, `s` for cpds, `D` for the dataset, `c` and `l` for cost
//! threats, and `f`, `h` as `values` tables for squared error. Confidences
//! come from the matching `edge` declarations.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dsl::{DslError, Document};
use crate::error::Error;
use crate::losses::{self, Check, LossReport, SolverSummary};
use crate::model::{Cpd, JointTable};
use crate::score::Score;
use crate::solver::SolveOptions;

pub const SCHEMA: &str = "pdgloss.report/1";

/// Names accepted by [`run_loss`].
pub const LOSS_NAMES: [&str; 13] = [
    "surprisal",
    "cross-entropy",
    "marginal-nll",
    "supervised-ce",
    "accuracy",
    "mse",
    "regularized",
    "elbo",
    "vae-elbo",
    "beta-elbo",
    "expected-cost",
    "scenario",
    "supervised-limit",
];

/// Default `γ` for the large-`γ` approximation in `scenario`.
pub const SCENARIO_GAMMA: f64 = 1e3;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Parse(#[from] DslError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("unknown loss `{0}`; expected one of: {list}", list = LOSS_NAMES.join(", "))]
    UnknownLoss(String),
    #[error("the document has no {0}")]
    Missing(String),
}

/// Values that override what the document says.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParams {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

type Run<T> = Result<T, CommandError>;

fn cpd(doc: &Document, name: &str) -> Run<Cpd> {
    Ok(doc.cpd(name).ok_or_else(|| CommandError::Missing(format!("cpd `{name}`")))??)
}

fn dataset(doc: &Document) -> Run<losses::Dataset> {
    Ok(doc.dataset("D").ok_or_else(|| CommandError::Missing("dataset `D`".into()))??)
}

fn event(doc: &Document) -> Run<(String, String)> {
    doc.events().into_iter().next().ok_or_else(|| CommandError::Missing("event".into()))
}

fn event_on(doc: &Document, var: &str) -> Run<String> {
    doc.events()
        .into_iter()
        .find(|(v, _)| v == var)
        .map(|(_, value)| value)
        .ok_or_else(|| CommandError::Missing(format!("event on `{var}`")))
}

fn beta(doc: &Document, label: &str) -> f64 {
    doc.weights(label).map_or(1.0, |(b, _)| b)
}

fn values(doc: &Document, name: &str) -> Run<(Vec<crate::model::Variable>, Vec<f64>)> {
    doc.values(name).ok_or_else(|| CommandError::Missing(format!("values table `{name}`")))
}

/// `−ln c(t | ·)` per row of a threat cpd whose first target value is `t`.
fn costs_of(threat: &Cpd) -> Vec<f64> {
    (0..threat.rows()).map(|r| -threat.prob(r, 0).ln()).collect()
}

/// Evaluates the named loss on the document's ingredients. `scenario`
/// returns three reports; every other loss returns one.
pub fn run_loss(name: &str, doc: &Document, params: &LossParams, opts: &SolveOptions) -> Run<Vec<LossReport>> {
    let one = |r: crate::Result<LossReport>| -> Run<Vec<LossReport>> { Ok(vec![r?]) };
    match name {
        "surprisal" => one(losses::surprisal(&cpd(doc, "p")?, &event(doc)?.1, opts)),
        "cross-entropy" => one(losses::cross_entropy(&cpd(doc, "p")?, &dataset(doc)?, opts)),
        "marginal-nll" => {
            let p = cpd(doc, "p")?;
            if doc.dataset("D").is_some() {
                one(losses::marginal_nll_dataset(&p, &dataset(doc)?, opts))
            } else {
                let (var, value) = event(doc)?;
                one(losses::marginal_nll(&p, &var, &value, opts))
            }
        }
        "supervised-ce" => one(losses::supervised_ce(&cpd(doc, "h")?, &dataset(doc)?, opts)),
        "accuracy" => one(losses::accuracy(
            &cpd(doc, "f")?,
            &cpd(doc, "h")?,
            &cpd(doc, "D")?,
            beta(doc, "D"),
            beta(doc, "f"),
            beta(doc, "h"),
            opts,
        )),
        "mse" => {
            let (scope, f) = values(doc, "f")?;
            let (_, h) = values(doc, "h")?;
            let x = scope.first().ok_or_else(|| CommandError::Missing("scope for `f`".into()))?;
            one(losses::mse(x, &f, &h, &dataset(doc)?))
        }
        "regularized" => {
            let q = cpd(doc, "q")?;
            let theta = q.targets().first().map(|v| v.name().to_string()).unwrap_or_default();
            let value = event_on(doc, &theta)?;
            let bq = params.beta.unwrap_or_else(|| beta(doc, "q"));
            one(losses::regularized(&cpd(doc, "p")?, &q, &value, &dataset(doc)?, bq, opts))
        }
        "elbo" => {
            let (var, value) = event(doc)?;
            one(losses::elbo(&cpd(doc, "p")?, &cpd(doc, "q")?, &var, &value, opts))
        }
        "vae-elbo" | "beta-elbo" => {
            let (p, e, d) = (cpd(doc, "p")?, cpd(doc, "e")?, cpd(doc, "d")?);
            let b = params.beta.unwrap_or_else(|| beta(doc, "p"));
            if doc.dataset("D").is_some() {
                one(losses::vae_elbo_dataset(&p, &e, &d, &dataset(doc)?, b, opts))
            } else {
                one(losses::vae_elbo(&p, &e, &d, &event(doc)?.1, b, opts))
            }
        }
        "expected-cost" => {
            let p = cpd(doc, "p")?;
            let costs = costs_of(&cpd(doc, "c")?);
            if beta(doc, "p").is_infinite() {
                one(losses::expected_cost(&p, &costs, opts))
            } else {
                one(losses::expected_cost_soft(&p, &costs, opts))
            }
        }
        "scenario" => {
            let gamma = params.gamma.or_else(|| doc.query_number("loss", "gamma")).unwrap_or(SCENARIO_GAMMA);
            let r = losses::scenario_losses(
                &cpd(doc, "s")?,
                &cpd(doc, "d")?,
                &cpd(doc, "h")?,
                beta(doc, "s"),
                beta(doc, "d"),
                gamma,
                opts,
            )?;
            Ok(vec![r.l1, r.l2, r.l3])
        }
        "supervised-limit" => {
            let data = dataset(doc)?;
            let h = cpd(doc, "h")?;
            let l = cpd(doc, "l")?;
            let k = h.cols();
            let flat = costs_of(&l);
            let table: Vec<Vec<f64>> = flat.chunks(k.max(1)).map(<[f64]>::to_vec).collect();
            one(losses::supervised_limit(&data, &h, &table, opts))
        }
        other => Err(CommandError::UnknownLoss(other.to_string())),
    }
}

/// Hex SHA-256 of the input bytes.
pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub nats: Score,
}

/// A unitless number reported alongside the information quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalar {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginal {
    pub variable: String,
    pub values: Vec<(String, f64)>,
}

/// Per-variable marginals of a joint table.
pub fn marginals(mu: &JointTable) -> Vec<Marginal> {
    mu.variables()
        .iter()
        .filter_map(|v| {
            let m = mu.marginal(&[v.name()]).ok()?;
            Some(Marginal {
                variable: v.name().to_string(),
                values: v.domain().iter().cloned().zip(m.probs().iter().copied()).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub input_digest: String,
    pub units: &'static str,
    pub results: Vec<Quantity>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scalars: Vec<Scalar>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<SolverSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmin: Option<Vec<Marginal>>,
    pub ok: bool,
    pub wall_time_ms: f64,
}

impl Report {
    pub fn new(command: impl Into<String>, input: &[u8]) -> Report {
        Report {
            schema: SCHEMA,
            command: command.into(),
            input_digest: digest(input),
            units: "nats",
            results: Vec::new(),
            scalars: Vec::new(),
            checks: Vec::new(),
            diagnostics: Vec::new(),
            argmin: None,
            ok: true,
            wall_time_ms: 0.0,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Score) {
        self.results.push(Quantity { name: name.into(), nats: value });
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: f64) {
        self.scalars.push(Scalar { name: name.into(), value });
    }

    pub fn check(&mut self, check: Check) {
        self.ok &= check.passed;
        self.checks.push(check);
    }

    /// Adds a loss report's numbers, checks, and solver diagnostics.
    pub fn add_loss(&mut self, r: &LossReport) {
        let n = &r.name;
        self.push(format!("{n}.direct"), r.direct);
        self.push(format!("{n}.inconsistency"), r.inconsistency);
        self.push(format!("{n}.correction"), r.correction);
        self.push(format!("{n}.predicted"), r.predicted());
        self.push(format!("{n}.discrepancy"), Score::nats(r.discrepancy()));
        for (k, v) in &r.extras {
            self.push(format!("{n}.{k}"), *v);
        }
        let relation = match r.relation {
            losses::Relation::Equal => "=",
            losses::Relation::LowerBound => "<=",
        };
        let d = r.discrepancy();
        self.check(Check::new(
            format!("{n}: direct {relation} scale * inconsistency + correction"),
            d <= r.tolerance,
            format!("scale {}, discrepancy {d:.3e}, tolerance {:e}", r.scale, r.tolerance),
        ));
        for c in &r.checks {
            self.check(Check::new(format!("{n}: {}", c.name), c.passed, c.detail.clone()));
        }
        if let Some(s) = r.solver {
            self.diagnostics.push(s);
        }
    }

    pub fn any_unconverged(&self) -> bool {
        self.diagnostics.iter().any(|d| !d.converged)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(digest(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn surprisal_from_text() {
        let doc = parse("var X {x0, x1}\ncpd p : -> X = [0.25, 0.75]\nedge p\nevent X = x0\n").unwrap();
        let r = run_loss("surprisal", &doc, &LossParams::default(), &SolveOptions::default()).unwrap();
        assert!((r[0].inconsistency.value() - 4f64.ln()).abs() < 1e-6);
        let mut report = Report::new("loss", b"x");
        report.add_loss(&r[0]);
        assert!(report.ok);
        assert!(report.to_json().contains(SCHEMA));
    }

    #[test]
    fn unknown_loss() {
        let doc = parse("var X {a}\n").unwrap();
        assert!(matches!(
            run_loss("hinge", &doc, &LossParams::default(), &SolveOptions::default()),
            Err(CommandError::UnknownLoss(_))
        ));
    }
}
