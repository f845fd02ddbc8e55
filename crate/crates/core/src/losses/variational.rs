//! Evidence lower bounds as inconsistencies.

use super::{event, single_target, surprise, Check, Dataset, LossReport};
use crate::error::{Error, Result};
use crate::model::{Cpd, Edge, JointTable, Pdg, Variable};
use crate::score::Score;
use crate::solver::SolveOptions;

/// `−ELBO_{p,q}(x) = E_{z∼q} log q(z)/p(x,z)` for a joint `p` over the
/// observed variable and the latents, and a variational `q` over the latents.
pub fn elbo(p: &Cpd, q: &Cpd, variable: &str, value: &str, opts: &SolveOptions) -> Result<LossReport> {
    if !p.is_unconditional() || !q.is_unconditional() {
        return Err(Error::ShapeMismatch("p and q must be unconditional".into()));
    }
    let joint = JointTable::new(p.targets().to_vec(), p.table().to_vec())?;
    let xpos = joint.position(variable)?;
    let var = joint.variables()[xpos].clone();
    let latents: Vec<Variable> = p.targets().iter().filter(|v| v.name() != variable).cloned().collect();
    if q.targets() != latents.as_slice() {
        return Err(Error::ShapeMismatch("q must range over p's other variables, in p's order".into()));
    }
    let xi = var.index_of(value)?;
    let mut direct = 0.0;
    for (zi, &qz) in q.table().iter().enumerate() {
        if qz == 0.0 {
            continue;
        }
        let mut assignment = q.target_layout().assignment(zi);
        assignment.insert(xpos, xi);
        direct += qz * (qz.ln() + surprise(joint.prob(&assignment)));
    }
    let evidence = surprise(joint.marginal(&[variable])?.probs()[xi]);

    let pdg = Pdg::new(
        p.targets().to_vec(),
        vec![Edge::new("p", p.clone()), event(&var, value)?, Edge::new("q", q.clone()).hard()],
    )?;
    let (mut report, _) = LossReport::solved("elbo", pdg, 0.0, Score::nats(direct), opts)?;
    report.checks.push(Check::at_most("-log p(x) <= -ELBO", Score::nats(evidence), report.direct, 1e-12));
    report.extras.push(("-log p(x)".into(), Score::nats(evidence)));
    Ok(report)
}

struct Vae {
    x: Variable,
    z: Variable,
}

fn check_vae(prior: &Cpd, e: &Cpd, d: &Cpd, beta: f64) -> Result<Vae> {
    let z = single_target(prior, "the prior")?;
    if d.sources() != std::slice::from_ref(&z) || d.targets().len() != 1 {
        return Err(Error::ShapeMismatch("the decoder must be a cpd d(X | Z)".into()));
    }
    let x = d.targets()[0].clone();
    if e.sources() != std::slice::from_ref(&x) || e.targets() != std::slice::from_ref(&z) {
        return Err(Error::ShapeMismatch("the encoder must be a cpd e(Z | X)".into()));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be finite and nonnegative, got {beta}")));
    }
    Ok(Vae { x, z })
}

/// Reconstruction error `E_{z∼e(·|x)} log 1/d(x|z)` and `D(e(·|x) ‖ p)`.
fn vae_terms(prior: &Cpd, e: &Cpd, d: &Cpd, xi: usize) -> (f64, f64) {
    let (mut rec, mut kl) = (0.0, 0.0);
    for (zi, &ez) in e.row(xi).iter().enumerate() {
        if ez == 0.0 {
            continue;
        }
        rec += ez * surprise(d.prob(zi, xi));
        kl += ez * (ez.ln() + surprise(prior.prob(0, zi)));
    }
    (rec, kl)
}

fn beta_term(beta: f64, kl: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        beta * kl
    }
}

/// `−log Pr_{p,d}(x)` with `Pr_{p,d}(x) = Σ_z p(z) d(x|z)`.
fn evidence(prior: &Cpd, d: &Cpd, xi: usize) -> f64 {
    surprise((0..prior.cols()).map(|zi| prior.prob(0, zi) * d.prob(zi, xi)).sum())
}

fn vae_edges(prior: &Cpd, e: &Cpd, d: &Cpd, beta: f64, observation: Edge) -> Vec<Edge> {
    vec![
        Edge::new("e", e.clone()).hard(),
        observation,
        Edge::new("d", d.clone()),
        Edge::new("p", prior.clone()).with_beta(beta),
    ]
}

fn vae_name(beta: f64) -> &'static str {
    if beta == 1.0 {
        "vae-elbo"
    } else {
        "beta-elbo"
    }
}

/// The negative β-ELBO of an autoencoder at one sample `x`:
/// `Rec(x) + β · D(e(Z|x) ‖ p)`. With `β = 1` this is `−ELBO`; with
/// `β = 0` it is the reconstruction error.
pub fn vae_elbo(prior: &Cpd, e: &Cpd, d: &Cpd, value: &str, beta: f64, opts: &SolveOptions) -> Result<LossReport> {
    let Vae { x, z } = check_vae(prior, e, d, beta)?;
    let xi = x.index_of(value)?;
    let (rec, kl) = vae_terms(prior, e, d, xi);
    let direct = rec + beta_term(beta, kl);
    let pdg = Pdg::new(vec![x.clone(), z], vae_edges(prior, e, d, beta, event(&x, value)?))?;
    let (mut report, _) = LossReport::solved(vae_name(beta), pdg, 0.0, Score::nats(direct), opts)?;
    let ev = Score::nats(evidence(prior, d, xi));
    if beta >= 1.0 {
        report.checks.push(Check::at_most("-log Pr(x) <= -ELBO", ev, report.direct, 1e-12));
    }
    report.extras.push(("reconstruction".into(), Score::nats(rec)));
    report.extras.push(("-log Pr(x)".into(), ev));
    Ok(report)
}

/// The average negative β-ELBO over a dataset of observations of `X`.
///
/// The correction is `H(D̂) + (β − 1) · I(X; Z)`, the mutual information
/// taken under `D̂(x) e(z|x)`; it reduces to `H(D̂)` for the ordinary ELBO.
pub fn vae_elbo_dataset(
    prior: &Cpd,
    e: &Cpd,
    d: &Cpd,
    data: &Dataset,
    beta: f64,
    opts: &SolveOptions,
) -> Result<LossReport> {
    let Vae { x, z } = check_vae(prior, e, d, beta)?;
    if data.variables() != std::slice::from_ref(&x) {
        return Err(Error::ShapeMismatch(format!("the dataset must range over `{}` alone", x.name())));
    }
    let m = data.len() as f64;
    let (mut direct, mut bound) = (0.0, 0.0);
    for r in data.records() {
        let (rec, kl) = vae_terms(prior, e, d, r[0]);
        direct += (rec + beta_term(beta, kl)) / m;
        bound += evidence(prior, d, r[0]) / m;
    }
    let empirical = data.empirical();
    let mut mu = Vec::with_capacity(x.size() * z.size());
    for xi in 0..x.size() {
        for zi in 0..z.size() {
            mu.push(empirical.probs()[xi] * e.prob(xi, zi));
        }
    }
    let mu = JointTable::new(vec![x.clone(), z.clone()], mu)?;
    let mutual = mu.marginal(&[x.name()])?.entropy() + mu.marginal(&[z.name()])?.entropy() - mu.entropy();
    let correction = empirical.entropy() + (beta - 1.0) * mutual;

    let pdg = Pdg::new(vec![x, z], vae_edges(prior, e, d, beta, Edge::new("D", data.cpd()).hard()))?;
    let (report, _) = LossReport::solved(vae_name(beta), pdg, 0.0, Score::nats(direct), opts)?;
    let mut report = report.with_correction(correction);
    if beta >= 1.0 {
        report.checks.push(Check::at_most("-log Pr(D) <= -ELBO", Score::nats(bound), report.direct, 1e-12));
    }
    report.extras.push(("-log Pr(D) per record".into(), Score::nats(bound)));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xz() -> (Variable, Variable) {
        (Variable::binary("X"), Variable::binary("Z"))
    }

    #[test]
    fn elbo_hand_values() {
        let (x, z) = xz();
        let p = Cpd::new(vec![], vec![x, z.clone()], vec![0.4, 0.15, 0.25, 0.2]).unwrap();
        let q = Cpd::unconditional(z, vec![0.6, 0.4]).unwrap();
        let r = elbo(&p, &q, "X", "x0", &SolveOptions::default()).unwrap();
        let expected = 0.6 * (0.6f64 / 0.4).ln() + 0.4 * (0.4f64 / 0.15).ln();
        assert!((r.direct.value() - expected).abs() < 1e-12);
        assert!((r.direct.value() - 0.63561).abs() < 1e-5);
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn elbo_tight_at_the_marginal() {
        let (x, z) = xz();
        let p = Cpd::new(vec![], vec![x, z.clone()], vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        let q = Cpd::unconditional(z, vec![0.3, 0.7]).unwrap();
        let r = elbo(&p, &q, "X", "x1", &SolveOptions::default()).unwrap();
        assert!((r.direct.value() + 0.6f64.ln()).abs() < 1e-12);
        assert!(r.holds());
    }

    fn vae_parts() -> (Cpd, Cpd, Cpd) {
        let (x, z) = xz();
        let prior = Cpd::unconditional(z.clone(), vec![0.5, 0.5]).unwrap();
        let e = Cpd::conditional(x.clone(), z.clone(), vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let d = Cpd::conditional(z, x, vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        (prior, e, d)
    }

    #[test]
    fn vae_hand_values() {
        let (p, e, d) = vae_parts();
        let r = vae_elbo(&p, &e, &d, "x0", 1.0, &SolveOptions::default()).unwrap();
        let rec = -0.7 * 0.8f64.ln() - 0.3 * 0.3f64.ln();
        let kl = 0.7 * (0.7f64 / 0.5).ln() + 0.3 * (0.3f64 / 0.5).ln();
        assert!((rec - 0.51739).abs() < 1e-5);
        assert!((kl - 0.08228).abs() < 1e-5);
        assert!((r.direct.value() - rec - kl).abs() < 1e-12);
        assert!(r.holds(), "{r:?}");
        let r0 = vae_elbo(&p, &e, &d, "x0", 0.0, &SolveOptions::default()).unwrap();
        assert!((r0.direct.value() - rec).abs() < 1e-12);
        assert!(r0.holds(), "{r0:?}");
    }

    #[test]
    fn vae_dataset_with_beta() {
        let (p, e, d) = vae_parts();
        let data = Dataset::new(vec![Variable::binary("X")], vec![vec![0], vec![1], vec![1]]).unwrap();
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let r = vae_elbo_dataset(&p, &e, &d, &data, beta, &SolveOptions::default()).unwrap();
            assert!(r.holds(), "beta {beta}: {r:?}");
        }
    }
}
