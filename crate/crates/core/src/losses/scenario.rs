//! Three ways to train a predictor `h(Y|X)` from a simulator `s(X,Y)` and
//! data `d(X,Y)`.

use super::{conditional_entropy, surprise, Check, LossReport, Relation, LOSS_TOLERANCE};
use crate::closed_form::pdg_divergence;
use crate::error::{Error, Result};
use crate::model::{Cpd, Edge, JointTable, Pdg, Variable};
use crate::score::Score;
use crate::solver::{min_gamma_score, SolveOptions};

/// Tolerance of the large-`γ` approximation to the discounted loss.
pub const L2_TOLERANCE: f64 = 1e-2;

const PREDICTOR_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLosses {
    /// Cross-entropy against the mixture `λ_s s + λ_d d`.
    pub l1: LossReport,
    /// `E_d[s · log 1/h]`, against a large-`γ` inconsistency.
    pub l2: LossReport,
    /// The PDG holding `s`, `d`, `h` with confidences `λ_s`, `λ_d`, 1.
    pub l3: LossReport,
}

struct Parts {
    x: Variable,
    y: Variable,
}

fn check(s: &Cpd, d: &Cpd, h: &Cpd, lambda_s: f64, lambda_d: f64) -> Result<Parts> {
    if !s.is_unconditional() || !d.is_unconditional() || s.targets() != d.targets() || s.targets().len() != 2 {
        return Err(Error::ShapeMismatch("s and d must be unconditional cpds over the same (X, Y)".into()));
    }
    let (x, y) = (s.targets()[0].clone(), s.targets()[1].clone());
    if h.sources() != std::slice::from_ref(&x) || h.targets() != std::slice::from_ref(&y) {
        return Err(Error::ShapeMismatch(format!("h must be a cpd {}|{}", y.name(), x.name())));
    }
    check_lambdas(lambda_s, lambda_d)?;
    Ok(Parts { x, y })
}

fn check_lambdas(lambda_s: f64, lambda_d: f64) -> Result<()> {
    if !(lambda_s > 0.0 && lambda_d > 0.0 && (lambda_s + lambda_d - 1.0).abs() <= 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "weights ({lambda_s}, {lambda_d}) must be positive and sum to 1"
        )));
    }
    Ok(())
}

/// `E_{w} log 1/h(Y|X)` for a nonnegative weight table `w` over `(X, Y)`.
fn weighted_ce(w: &[f64], h: &Cpd) -> f64 {
    let k = h.cols();
    w.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| p * surprise(h.prob(i / k, i % k)))
        .sum()
}

/// `h*(Y|x) ∝ s(x, Y)^{λ_s} d(x, Y)^{λ_d}`, uniform where the product vanishes.
pub fn l3_optimal_predictor(s: &Cpd, d: &Cpd, lambda_s: f64, lambda_d: f64) -> Result<Cpd> {
    if !s.is_unconditional() || !d.is_unconditional() || s.targets() != d.targets() || s.targets().len() != 2 {
        return Err(Error::ShapeMismatch("s and d must be unconditional cpds over the same (X, Y)".into()));
    }
    check_lambdas(lambda_s, lambda_d)?;
    let (x, y) = (s.targets()[0].clone(), s.targets()[1].clone());
    let k = y.size();
    let rows = (0..x.size())
        .map(|xi| {
            let w: Vec<f64> = (0..k)
                .map(|yi| {
                    let (a, b) = (s.table()[xi * k + yi], d.table()[xi * k + yi]);
                    if a == 0.0 || b == 0.0 {
                        0.0
                    } else {
                        (lambda_s * a.ln() + lambda_d * b.ln()).exp()
                    }
                })
                .collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                w.iter().map(|v| v / total).collect()
            } else {
                vec![1.0 / k as f64; k]
            }
        })
        .collect();
    Cpd::conditional(x, y, rows)
}

fn l1(s: &Cpd, d: &Cpd, h: &Cpd, lambda_s: f64, lambda_d: f64, parts: &Parts, opts: &SolveOptions) -> Result<LossReport> {
    let direct = lambda_s * weighted_ce(s.table(), h) + lambda_d * weighted_ce(d.table(), h);
    let mixture: Vec<f64> = s.table().iter().zip(d.table()).map(|(a, b)| lambda_s * a + lambda_d * b).collect();
    let mixture = JointTable::new(vec![parts.x.clone(), parts.y.clone()], mixture)?;
    let correction = conditional_entropy(&mixture, &[parts.y.name()], &[parts.x.name()])?;

    let z = Variable::new("Z", vec!["sim".into(), "dat".into()])?;
    let mut switch = s.table().to_vec();
    switch.extend_from_slice(d.table());
    let pdg = Pdg::new(
        vec![z.clone(), parts.x.clone(), parts.y.clone()],
        vec![
            Edge::new("lambda", Cpd::unconditional(z.clone(), vec![lambda_s, lambda_d])?).hard(),
            Edge::new("switch", Cpd::new(vec![z], vec![parts.x.clone(), parts.y.clone()], switch)?).hard(),
            Edge::new("h", h.clone()),
        ],
    )?;
    let (report, _) = LossReport::solved("scenario-l1", pdg, 0.0, Score::nats(direct), opts)?;
    Ok(report.with_correction(correction))
}

fn l2(s: &Cpd, d: &Cpd, h: &Cpd, gamma: f64, parts: &Parts, opts: &SolveOptions) -> Result<LossReport> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be finite and positive, got {gamma}")));
    }
    let product: Vec<f64> = s.table().iter().zip(d.table()).map(|(a, b)| a * b).collect();
    let c: f64 = product.iter().sum();
    if c == 0.0 {
        return Err(Error::InvalidArgument("s and d have disjoint supports".into()));
    }
    let direct = weighted_ce(&product, h);
    let nu = JointTable::from_weights(vec![parts.x.clone(), parts.y.clone()], product)?;
    let h_nu = conditional_entropy(&nu, &[parts.y.name()], &[parts.x.name()])?;

    let pdg = Pdg::new(
        vec![parts.x.clone(), parts.y.clone()],
        vec![
            Edge::new("s", s.clone()).with_beta(gamma),
            Edge::new("d", d.clone()).with_beta(gamma),
            Edge::new("h", h.clone()).with_alpha(0.0),
        ],
    )?;
    let (report, _) = LossReport::solved("scenario-l2", pdg, gamma, Score::nats(direct), opts)?;
    let mut report = report.with_correction(c * h_nu + gamma * c * c.ln());
    report.scale = c;
    report.tolerance = L2_TOLERANCE;
    Ok(report)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn l3(s: &Cpd, d: &Cpd, h: &Cpd, lambda_s: f64, lambda_d: f64, parts: &Parts, opts: &SolveOptions) -> Result<LossReport> {
    let vars = vec![parts.x.clone(), parts.y.clone()];
    let beliefs = |h: &Cpd| {
        vec![
            Edge::new("s", s.clone()).with_beta(lambda_s),
            Edge::new("d", d.clone()).with_beta(lambda_d),
            Edge::new("h", h.clone()),
        ]
    };
    let direct = pdg_divergence(s.table(), d.table(), lambda_s, lambda_d)?;
    let pdg = Pdg::new(vars.clone(), beliefs(h))?;
    let (mut report, _) = LossReport::solved("scenario-l3", pdg, 0.0, direct, opts)?;
    report.relation = Relation::LowerBound;

    let best = l3_optimal_predictor(s, d, lambda_s, lambda_d)?;
    let pair = Pdg::new(vars.clone(), beliefs(&best)[..2].to_vec())?;
    let argmin = min_gamma_score(&pair, 0.0, opts)?.argmin;
    let conditional = argmin.conditional(&[parts.y.name()], &[parts.x.name()])?;
    let gap = (0..parts.x.size())
        .filter_map(|xi| conditional.row(xi).map(|row| max_gap(row, best.row(xi))))
        .fold(0.0, f64::max);
    report.checks.push(Check::new(
        "optimal predictor",
        gap <= PREDICTOR_TOLERANCE,
        format!("max |μ*(Y|x) − h*(Y|x)| = {gap:.3e}"),
    ));

    let at_best = min_gamma_score(&Pdg::new(vars, beliefs(&best))?, 0.0, opts)?.inconsistency;
    report.checks.push(Check::close("tight at the optimal predictor", at_best, direct, LOSS_TOLERANCE));
    report.extras.push(("L3 at the optimal predictor".into(), at_best));
    Ok(report)
}

/// The three losses for predictor `h`; `gamma` is the confidence scale used
/// to approximate the discounted loss.
pub fn scenario_losses(
    s: &Cpd,
    d: &Cpd,
    h: &Cpd,
    lambda_s: f64,
    lambda_d: f64,
    gamma: f64,
    opts: &SolveOptions,
) -> Result<ScenarioLosses> {
    let parts = check(s, d, h, lambda_s, lambda_d)?;
    Ok(ScenarioLosses {
        l1: l1(s, d, h, lambda_s, lambda_d, &parts, opts)?,
        l2: l2(s, d, h, gamma, &parts, opts)?,
        l3: l3(s, d, h, lambda_s, lambda_d, &parts, opts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<Variable> {
        vec![Variable::binary("X"), Variable::binary("Y")]
    }

    fn joint(t: [f64; 4]) -> Cpd {
        Cpd::new(vec![], xy(), t.to_vec()).unwrap()
    }

    fn h() -> Cpd {
        let v = xy();
        Cpd::conditional(v[0].clone(), v[1].clone(), vec![vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap()
    }

    #[test]
    fn all_three_hold() {
        let s = joint([0.1, 0.3, 0.4, 0.2]);
        let d = joint([0.25, 0.25, 0.1, 0.4]);
        let r = scenario_losses(&s, &d, &h(), 0.5, 0.5, 1e3, &SolveOptions::default()).unwrap();
        assert!(r.l1.holds(), "{:?}", r.l1);
        assert!(r.l2.holds(), "{:?}", r.l2);
        assert!(r.l3.holds(), "{:?}", r.l3);
    }

    #[test]
    fn l3_is_calibrated() {
        let s = joint([0.1, 0.3, 0.4, 0.2]);
        let best = l3_optimal_predictor(&s, &s, 0.3, 0.7).unwrap();
        assert!(max_gap(best.row(0), &[0.25, 0.75]) < 1e-12);
        assert!(max_gap(best.row(1), &[2.0 / 3.0, 1.0 / 3.0]) < 1e-12);
    }

    #[test]
    fn l1_is_minimized_by_the_mixture() {
        let s = joint([0.1, 0.3, 0.4, 0.2]);
        let d = joint([0.25, 0.25, 0.1, 0.4]);
        let v = xy();
        let mix = |xi: usize| {
            let a = 0.3 * s.table()[2 * xi] + 0.7 * d.table()[2 * xi];
            let b = 0.3 * s.table()[2 * xi + 1] + 0.7 * d.table()[2 * xi + 1];
            a / (a + b)
        };
        let loss = |q0: f64, q1: f64| {
            let h = Cpd::conditional(v[0].clone(), v[1].clone(), vec![vec![q0, 1.0 - q0], vec![q1, 1.0 - q1]]).unwrap();
            0.3 * weighted_ce(s.table(), &h) + 0.7 * weighted_ce(d.table(), &h)
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 1..1000 {
            for j in 1..1000 {
                let (q0, q1) = (i as f64 / 1000.0, j as f64 / 1000.0);
                let l = loss(q0, q1);
                if l < best.0 {
                    best = (l, q0, q1);
                }
            }
        }
        assert!((best.1 - mix(0)).abs() < 2e-3 && (best.2 - mix(1)).abs() < 2e-3, "{best:?}");
    }
}
