//! Arbitrary costs as inconsistency, via a truth variable `T ∈ {t, f}`.

use super::{event, Check, Dataset, LossReport};
use crate::error::{Error, Result};
use crate::model::{Cpd, Edge, Pdg, Variable};
use crate::score::Score;
use crate::solver::{limit_gamma_inf, min_gamma_score, SolveOptions};

/// Tolerance of the `γ → ∞` value against the enumerated expected loss.
pub const SUPERVISED_LIMIT_TOLERANCE: f64 = 1e-9;

fn truth() -> Variable {
    Variable::new("T", vec!["t".into(), "f".into()]).expect("two distinct labels")
}

fn check_costs(costs: &[f64], n: usize, what: &str) -> Result<()> {
    if costs.len() != n {
        return Err(Error::ShapeMismatch(format!("{what} has {} entries, expected {n}", costs.len())));
    }
    if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidArgument(format!("{what} entries must be finite and nonnegative, got {c}")));
    }
    Ok(())
}

/// `ĉ(t | x) = e^{−c(x)}` over the given sources.
fn threat(sources: Vec<Variable>, costs: &[f64]) -> Result<Cpd> {
    let table = costs.iter().flat_map(|c| [(-c).exp(), -(-c).exp_m1()]).collect();
    Cpd::new(sources, vec![truth()], table)
}

fn cost_pdg(p: &Cpd, costs: &[f64], hard_p: bool) -> Result<(Variable, Pdg)> {
    let x = super::single_target(p, "p")?;
    check_costs(costs, x.size(), "the cost table")?;
    let t = truth();
    let p_edge = if hard_p { Edge::new("p", p.clone()).hard() } else { Edge::new("p", p.clone()) };
    let pdg = Pdg::new(vec![x.clone(), t.clone()], vec![p_edge, Edge::new("c", threat(vec![x.clone()], costs)?), event(&t, "t")?])?;
    Ok((x, pdg))
}

/// `E_{x∼p} c(x)`, from `p` (hard), `ĉ`, and the event `T = t`.
pub fn expected_cost(p: &Cpd, costs: &[f64], opts: &SolveOptions) -> Result<LossReport> {
    let (_, pdg) = cost_pdg(p, costs, true)?;
    let direct: f64 = p.table().iter().zip(costs).map(|(q, c)| q * c).sum();
    Ok(LossReport::solved("expected-cost", pdg, 0.0, Score::nats(direct), opts)?.0)
}

/// The same construction with `p` held at confidence 1, whose value is
/// `−log E_{x∼p} e^{−c(x)}`.
pub fn expected_cost_soft(p: &Cpd, costs: &[f64], opts: &SolveOptions) -> Result<LossReport> {
    let (_, pdg) = cost_pdg(p, costs, false)?;
    let mass: f64 = p.table().iter().zip(costs).map(|(q, c)| q * (-c).exp()).sum();
    let direct = -mass.ln();
    let (mut report, _) = LossReport::solved("expected-cost-soft", pdg, 0.0, Score::nats(direct), opts)?;
    let mean: f64 = p.table().iter().zip(costs).map(|(q, c)| q * c).sum();
    report.checks.push(Check::at_most("soft <= expected cost", report.direct, Score::nats(mean), 1e-12));
    Ok(report)
}

struct Supervised {
    pdg: Pdg,
    direct: f64,
}

fn supervised_pdg(data: &Dataset, h: &Cpd, loss: &[Vec<f64>]) -> Result<Supervised> {
    let [x, y] = data.variables() else {
        return Err(Error::ShapeMismatch("the dataset must range over exactly (X, Y)".into()));
    };
    if h.sources() != std::slice::from_ref(x) || h.targets().len() != 1 {
        return Err(Error::ShapeMismatch(format!("h must be a cpd over one target given `{}`", x.name())));
    }
    let yp = h.targets()[0].clone();
    if loss.len() != y.size() {
        return Err(Error::ShapeMismatch(format!("the loss needs one row per value of `{}`", y.name())));
    }
    for row in loss {
        check_costs(row, yp.size(), "a loss row")?;
    }
    let d = data.empirical();
    let mut direct = 0.0;
    for xi in 0..x.size() {
        for (yi, costs) in loss.iter().enumerate().take(y.size()) {
            let w = d.prob(&[xi, yi]);
            if w > 0.0 {
                direct += w * h.row(xi).iter().zip(costs).map(|(q, l)| q * l).sum::<f64>();
            }
        }
    }
    let flat: Vec<f64> = loss.iter().flatten().copied().collect();
    let t = truth();
    let pdg = Pdg::new(
        vec![x.clone(), y.clone(), yp.clone(), t.clone()],
        vec![
            Edge::new("D", data.cpd()).hard(),
            Edge::new("h", h.clone()).hard(),
            Edge::new("l", threat(vec![y.clone(), yp], &flat)?),
            event(&t, "t")?,
        ],
    )?;
    Ok(Supervised { pdg, direct })
}

/// Expected loss `E_{(x,y)∼D̂, y′∼h(·|x)} ℓ(y, y′)` as the `γ → ∞` limit of a
/// PDG holding `D̂` and `h` with full confidence.
///
/// `loss[y][y′]` is indexed by value indices. The report's inconsistency is
/// the limiting value; the value at `γ = 0`, where the joint may correlate
/// `Y` with `Y′` to dodge the loss, is listed among the extras.
pub fn supervised_limit(data: &Dataset, h: &Cpd, loss: &[Vec<f64>], opts: &SolveOptions) -> Result<LossReport> {
    let Supervised { pdg, direct } = supervised_pdg(data, h, loss)?;
    let limit = limit_gamma_inf(&pdg)?;
    let at_zero = min_gamma_score(&pdg, 0.0, opts)?;
    let mut report = LossReport::new("supervised-limit", Some(pdg), Score::nats(direct), limit);
    report.gamma = f64::INFINITY;
    report.tolerance = SUPERVISED_LIMIT_TOLERANCE;
    report.checks.push(Check::at_most("gamma=0 <= limit", at_zero.inconsistency, limit, 1e-7));
    report.extras.push(("inconsistency at gamma=0".into(), at_zero.inconsistency));
    Ok(report)
}

/// `⟨S⟩_γ` for each `γ`, for watching the approach to the limit.
pub fn supervised_limit_sweep(
    data: &Dataset,
    h: &Cpd,
    loss: &[Vec<f64>],
    gammas: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<(f64, Score)>> {
    let Supervised { pdg, .. } = supervised_pdg(data, h, loss)?;
    gammas.iter().map(|&g| Ok((g, min_gamma_score(&pdg, g, opts)?.inconsistency))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Cpd {
        Cpd::unconditional(Variable::binary("X"), vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn expected_cost_hand_values() {
        let opts = SolveOptions::default();
        let hard = expected_cost(&p(), &[0.0, 2.0], &opts).unwrap();
        assert!((hard.direct.value() - 1.0).abs() < 1e-15);
        assert!(hard.holds(), "{hard:?}");
        let soft = expected_cost_soft(&p(), &[0.0, 2.0], &opts).unwrap();
        assert!((soft.direct.value() - 0.56621).abs() < 1e-5);
        assert!(soft.holds(), "{soft:?}");
    }

    #[test]
    fn constant_cost_cannot_be_dodged() {
        let opts = SolveOptions::default();
        for f in [expected_cost, expected_cost_soft] {
            let r = f(&p(), &[0.7, 0.7], &opts).unwrap();
            assert!((r.direct.value() - 0.7).abs() < 1e-12);
            assert!(r.holds(), "{r:?}");
        }
        assert!(expected_cost(&p(), &[0.0, 0.0], &opts).unwrap().inconsistency.value() < 1e-9);
    }

    #[test]
    fn negative_cost_rejected() {
        assert!(expected_cost(&p(), &[0.0, -1.0], &SolveOptions::default()).is_err());
    }

    fn zero_one() -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0], vec![1.0, 0.0]]
    }

    #[test]
    fn coin_flip_predictor() {
        let x = Variable::indexed("X", 1);
        let y = Variable::binary("Y");
        let data = Dataset::new(vec![x.clone(), y], vec![vec![0, 0], vec![0, 1]]).unwrap();
        let h = Cpd::conditional(x, Variable::binary("Yp"), vec![vec![0.5, 0.5]]).unwrap();
        let r = supervised_limit(&data, &h, &zero_one(), &SolveOptions::default()).unwrap();
        assert!((r.direct.value() - 0.5).abs() < 1e-15);
        assert!(r.holds(), "{r:?}");
        let zero = r.extras[0].1.value();
        assert!(zero < 0.5 - 1e-3, "γ=0 should squirm below the limit, got {zero}");
    }

    #[test]
    fn zero_loss_is_free() {
        let x = Variable::binary("X");
        let y = Variable::binary("Y");
        let data = Dataset::new(vec![x.clone(), y], vec![vec![0, 0], vec![1, 1], vec![1, 0]]).unwrap();
        let h = Cpd::conditional(x, Variable::binary("Yp"), vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let r = supervised_limit(&data, &h, &[vec![0.0; 2], vec![0.0; 2]], &SolveOptions::default()).unwrap();
        assert_eq!(r.direct.value(), 0.0);
        assert!(r.holds(), "{r:?}");
    }
}
