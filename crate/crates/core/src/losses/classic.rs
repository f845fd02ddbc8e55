//! Surprisal, cross-entropy, likelihood, accuracy, squared error, and
//! regularized losses.

use super::{conditional_entropy, event, names, single_target, surprise, Check, Dataset, LossReport};
use crate::closed_form::{two_gaussian_inconsistency, GaussianSpec, MseConstant};
use crate::error::{Error, Result};
use crate::model::{Cpd, Edge, JointTable, Pdg, Variable};
use crate::score::Score;
use crate::solver::{min_gamma_score, SolveOptions};

/// Extra values of `γ` at which the cross-entropy identity is verified.
pub const CROSS_ENTROPY_GAMMAS: [f64; 2] = [0.5, 1.0];

const CONDITIONAL_TOLERANCE: f64 = 1e-4;

fn mean(values: impl Iterator<Item = f64>, m: usize) -> f64 {
    values.sum::<f64>() / m as f64
}

/// `I_p[X = x] = −log p(x)`, from `p` and the hard observation `X = x`.
pub fn surprisal(p: &Cpd, value: &str, opts: &SolveOptions) -> Result<LossReport> {
    let var = single_target(p, "p")?;
    let direct = surprise(p.prob(0, var.index_of(value)?));
    let pdg = Pdg::new(vec![var.clone()], vec![Edge::new("p", p.clone()), event(&var, value)?])?;
    Ok(LossReport::solved("surprisal", pdg, 0.0, Score::nats(direct), opts)?.0)
}

fn joint_of(p: &Cpd, what: &str) -> Result<JointTable> {
    if !p.is_unconditional() {
        return Err(Error::ShapeMismatch(format!("{what} must be an unconditional cpd")));
    }
    JointTable::new(p.targets().to_vec(), p.table().to_vec())
}

/// Cross-entropy of `p` relative to the empirical distribution of `data`.
///
/// The PDG holds `p` and `D̂` (hard), both with `α = 0`, which makes the
/// identity `⟨·⟩_γ + (1+γ)·H(D̂) = CE` hold for every `γ`.
pub fn cross_entropy(p: &Cpd, data: &Dataset, opts: &SolveOptions) -> Result<LossReport> {
    if !p.is_unconditional() || p.targets() != data.variables() {
        return Err(Error::ShapeMismatch("p must be an unconditional cpd over exactly the dataset's variables".into()));
    }
    let direct = mean(data.records().iter().map(|r| surprise(p.table()[data.cell(r)])), data.len());
    let entropy = data.empirical().entropy();
    let pdg = Pdg::new(
        data.variables().to_vec(),
        vec![Edge::new("p", p.clone()).with_alpha(0.0), Edge::new("D", data.cpd()).hard().with_alpha(0.0)],
    )?;
    let (report, _) = LossReport::solved("cross-entropy", pdg.clone(), 0.0, Score::nats(direct), opts)?;
    let mut report = report.with_correction(entropy);
    for gamma in CROSS_ENTROPY_GAMMAS {
        let value = min_gamma_score(&pdg, gamma, opts)?.inconsistency;
        let corrected = if value.is_infinite() { value } else { Score::nats(value.value() + (1.0 + gamma) * entropy) };
        report.checks.push(Check::close(format!("gamma={gamma}"), corrected, report.direct, report.tolerance));
        report.extras.push((format!("inconsistency at gamma={gamma}"), value));
    }
    Ok(report)
}

/// `−log Σ_z p(x, z)` for a partial observation `variable = value` of a joint `p`.
pub fn marginal_nll(p: &Cpd, variable: &str, value: &str, opts: &SolveOptions) -> Result<LossReport> {
    let joint = joint_of(p, "p")?;
    let var = joint.variables()[joint.position(variable)?].clone();
    let observed = var.index_of(value)?;
    let direct = surprise(joint.marginal(&[variable])?.probs()[observed]);
    let pdg = Pdg::new(p.targets().to_vec(), vec![Edge::new("p", p.clone()), event(&var, value)?])?;
    let (mut report, result) = LossReport::solved("marginal-nll", pdg, 0.0, Score::nats(direct), opts)?;

    let others: Vec<&str> = names(p.targets()).into_iter().filter(|n| *n != variable).collect();
    if direct.is_finite() && !others.is_empty() {
        let want = joint.conditional(&others, &[variable])?;
        let got = result.argmin.conditional(&others, &[variable])?;
        let gap = match (want.row(observed), got.row(observed)) {
            (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            _ => f64::INFINITY,
        };
        report.checks.push(Check::new(
            "posterior",
            gap <= CONDITIONAL_TOLERANCE,
            format!("max |ν(rest | {variable}={value}) − p(rest | {variable}={value})| = {gap:.3e}"),
        ));
    }
    Ok(report)
}

/// Average marginal negative log-likelihood of `data` (over a subset of `p`'s variables).
pub fn marginal_nll_dataset(p: &Cpd, data: &Dataset, opts: &SolveOptions) -> Result<LossReport> {
    let joint = joint_of(p, "p")?;
    for v in data.variables() {
        if !p.targets().contains(v) {
            return Err(Error::ShapeMismatch(format!("dataset variable `{}` is not a variable of p", v.name())));
        }
    }
    let marginal = joint.marginal(&names(data.variables()))?;
    let direct = mean(data.records().iter().map(|r| surprise(marginal.probs()[data.cell(r)])), data.len());
    let pdg = Pdg::new(p.targets().to_vec(), vec![Edge::new("p", p.clone()), Edge::new("D", data.cpd()).hard()])?;
    let (report, _) = LossReport::solved("marginal-nll", pdg, 0.0, Score::nats(direct), opts)?;
    Ok(report.with_correction(data.empirical().entropy()))
}

/// Positions of `vars` within `within`, by name.
fn positions_in(vars: &[Variable], within: &[Variable]) -> Result<Vec<usize>> {
    vars.iter()
        .map(|v| {
            within
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| Error::ShapeMismatch(format!("variable `{}` is missing from the dataset", v.name())))
        })
        .collect()
}

/// `(source row, target column)` of `cpd` for a dataset record.
pub(crate) fn record_entry(cpd: &Cpd, data: &Dataset, record: &[usize]) -> Result<(usize, usize)> {
    let s = positions_in(cpd.sources(), data.variables())?;
    let t = positions_in(cpd.targets(), data.variables())?;
    let pick = |pos: &[usize]| pos.iter().map(|&i| record[i]).collect::<Vec<_>>();
    Ok((cpd.source_layout().index(&pick(&s)), cpd.target_layout().index(&pick(&t))))
}

/// Supervised cross-entropy `(1/m) Σ −log h(y_i | x_i)`.
pub fn supervised_ce(h: &Cpd, data: &Dataset, opts: &SolveOptions) -> Result<LossReport> {
    if h.sources().len() + h.targets().len() != data.variables().len() {
        return Err(Error::ShapeMismatch("the dataset must cover exactly h's sources and targets".into()));
    }
    let mut total = 0.0;
    for r in data.records() {
        let (row, col) = record_entry(h, data, r)?;
        total += surprise(h.prob(row, col));
    }
    let direct = total / data.len() as f64;
    let pdg = Pdg::new(data.variables().to_vec(), vec![Edge::new("D", data.cpd()).hard(), Edge::new("h", h.clone())])?;
    let correction = conditional_entropy(&data.empirical(), &names(h.targets()), &names(h.sources()))?;
    let (report, _) = LossReport::solved("supervised-ce", pdg, 0.0, Score::nats(direct), opts)?;
    Ok(report.with_correction(correction))
}

fn accuracy_pdg(f: &Cpd, h: &Cpd, d: &Cpd, beta_d: f64, beta_f: f64, beta_h: f64) -> Result<Pdg> {
    let mut vars = d.targets().to_vec();
    vars.extend(f.targets().iter().cloned());
    Pdg::new(
        vars,
        vec![
            Edge::new("D", d.clone()).with_beta(beta_d),
            Edge::new("f", f.clone()).with_beta(beta_f),
            Edge::new("h", h.clone()).with_beta(beta_h),
        ],
    )
}

/// `−β_D · log Pr_{x∼D}(f(x) = h(x))` for deterministic `f` (labels) and `h` (predictor).
///
/// The value does not depend on `beta_f` or `beta_h`; the report re-solves
/// with other values of both to confirm it.
pub fn accuracy(
    f: &Cpd,
    h: &Cpd,
    d: &Cpd,
    beta_d: f64,
    beta_f: f64,
    beta_h: f64,
    opts: &SolveOptions,
) -> Result<LossReport> {
    let (Some(fm), Some(hm)) = (f.as_function(), h.as_function()) else {
        return Err(Error::InvalidArgument("f and h must be deterministic".into()));
    };
    if f.sources() != d.targets() || h.sources() != d.targets() || f.targets() != h.targets() || !d.is_unconditional()
    {
        return Err(Error::ShapeMismatch("need f, h : X → Y and D over X".into()));
    }
    for (name, b) in [("beta_d", beta_d), ("beta_f", beta_f), ("beta_h", beta_h)] {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {b}")));
        }
    }
    let agree: f64 = (0..d.cols()).filter(|&x| fm[x] == hm[x]).map(|x| d.prob(0, x)).sum();
    let direct = if agree > 0.0 { -beta_d * agree.ln() } else { f64::INFINITY };
    let pdg = accuracy_pdg(f, h, d, beta_d, beta_f, beta_h)?;
    let (mut report, _) = LossReport::solved("accuracy", pdg, 0.0, Score::nats(direct), opts)?;
    let (bf, bh) = (2.0 * beta_f + 0.5, 0.5 * beta_h + 1.5);
    let other = min_gamma_score(&accuracy_pdg(f, h, d, beta_d, bf, bh)?, 0.0, opts)?.inconsistency;
    report.checks.push(Check::close(
        format!("independent of beta_f, beta_h (re-solved at {bf}, {bh})"),
        other,
        report.inconsistency,
        report.tolerance,
    ));
    Ok(report)
}

/// Squared error between regressors `f` and `h` (tables over the domain of
/// `x`) under the empirical distribution of `data`, as the inconsistency of
/// two unit-variance Gaussian beliefs about `Y`.
pub fn mse(x: &Variable, f: &[f64], h: &[f64], data: &Dataset) -> Result<LossReport> {
    if data.variables() != std::slice::from_ref(x) {
        return Err(Error::ShapeMismatch(format!("the dataset must range over `{}` alone", x.name())));
    }
    if f.len() != x.size() || h.len() != x.size() || f.iter().chain(h).any(|v| !v.is_finite()) {
        return Err(Error::ShapeMismatch(format!("f and h need one finite value per value of `{}`", x.name())));
    }
    let weights = data.empirical().probs().to_vec();
    let a: Vec<GaussianSpec> = f.iter().map(|&m| GaussianSpec::unit(m)).collect();
    let b: Vec<GaussianSpec> = h.iter().map(|&m| GaussianSpec::unit(m)).collect();
    let inconsistency = two_gaussian_inconsistency(&a, &b, &weights)?;
    let direct = Score::nats(MseConstant::AUTHORITATIVE.mse(f, h, &weights));
    Ok(LossReport::new("mse", None, direct, inconsistency))
}

/// Cross-entropy of `p(Y | θ)` against `data`, plus `beta_q · log 1/q(θ)`.
pub fn regularized(
    p: &Cpd,
    q: &Cpd,
    theta: &str,
    data: &Dataset,
    beta_q: f64,
    opts: &SolveOptions,
) -> Result<LossReport> {
    let th = single_target(q, "q")?;
    if p.sources() != std::slice::from_ref(&th) || p.targets() != data.variables() {
        return Err(Error::ShapeMismatch("need p(Y | Θ), q(Θ), and data over Y".into()));
    }
    if !(beta_q.is_finite() && beta_q >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta_q must be finite and nonnegative, got {beta_q}")));
    }
    let row = th.index_of(theta)?;
    let fit = mean(data.records().iter().map(|r| surprise(p.prob(row, data.cell(r)))), data.len());
    let penalty = if beta_q == 0.0 { 0.0 } else { beta_q * surprise(q.prob(0, row)) };

    let mut vars = vec![th.clone()];
    vars.extend(data.variables().iter().cloned());
    let pdg = Pdg::new(
        vars,
        vec![
            Edge::new("p", p.clone()),
            Edge::new("q", q.clone()).with_beta(beta_q),
            event(&th, theta)?,
            Edge::new("D", data.cpd()).hard(),
        ],
    )?;
    let (report, _) = LossReport::solved("regularized", pdg, 0.0, Score::nats(fit + penalty), opts)?;
    Ok(report.with_correction(data.empirical().entropy()))
}
