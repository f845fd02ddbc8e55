//! Scores of a joint distribution against a PDG.
//!
//! * `Inc_M(μ) = Σ_L β_L · E_{x∼μ} D(μ(Y|x) ‖ p_L(Y|x))`
//! * `IDef_M(μ) = −H(μ) + Σ_L α_L · H_μ(Y|X)`
//! * `[M]_γ(μ) = Inc_M(μ) + γ · IDef_M(μ)`
//!
//! Edges are visited in label order and cells in row-major order, so scores
//! are bit-identical under any permutation of the edge list.

use crate::error::{Error, Result};
use crate::model::{entropy, Edge, JointTable, Pdg};
use crate::score::Score;

/// Tolerance on conditionals when testing a hard edge for an exact match.
pub const HARD_MATCH_TOLERANCE: f64 = 1e-9;

/// `μ(S)` and `μ(S,T)` for one edge, indexed like the edge's cpd.
struct EdgeMarginals {
    source: Vec<f64>,
    joint: Vec<f64>,
    cols: usize,
}

impl EdgeMarginals {
    fn new(pdg: &Pdg, edge: &Edge, mu: &JointTable) -> Result<EdgeMarginals> {
        let (s, t) = pdg.edge_positions(edge)?;
        let cols = edge.cpd.cols();
        let rows = edge.cpd.rows();
        let mut st = s.clone();
        st.extend(&t);
        let proj = mu.layout().projection(&st);
        let mut joint = vec![0.0; rows * cols];
        for (cell, &idx) in proj.iter().enumerate() {
            joint[idx] += mu.probs()[cell];
        }
        let source = joint.chunks(cols).map(|r| r.iter().sum()).collect();
        Ok(EdgeMarginals { source, joint, cols })
    }

    /// `E_{x∼μ} D(μ(Y|x) ‖ p(Y|x))`, skipping zero-mass source rows.
    fn conditional_divergence(&self, edge: &Edge) -> f64 {
        let mut total = 0.0;
        for (r, &ms) in self.source.iter().enumerate() {
            if ms <= 0.0 {
                continue;
            }
            for c in 0..self.cols {
                let mst = self.joint[r * self.cols + c];
                if mst <= 0.0 {
                    continue;
                }
                let p = edge.cpd.prob(r, c);
                if p <= 0.0 {
                    return f64::INFINITY;
                }
                total += mst * (mst / (ms * p)).ln();
            }
        }
        total.max(0.0)
    }

    fn matches(&self, edge: &Edge) -> bool {
        self.source.iter().enumerate().filter(|(_, &ms)| ms > 0.0).all(|(r, &ms)| {
            (0..self.cols).all(|c| (self.joint[r * self.cols + c] / ms - edge.cpd.prob(r, c)).abs() <= HARD_MATCH_TOLERANCE)
        })
    }

    /// `H_μ(T | S)`.
    fn conditional_entropy(&self) -> f64 {
        let mut h = 0.0;
        for (r, &ms) in self.source.iter().enumerate() {
            if ms <= 0.0 {
                continue;
            }
            for &mst in &self.joint[r * self.cols..(r + 1) * self.cols] {
                if mst > 0.0 {
                    h -= mst * (mst / ms).ln();
                }
            }
        }
        h
    }
}

/// Brings `mu` into the PDG's variable order, failing unless the variable sets agree.
pub(crate) fn aligned(pdg: &Pdg, mu: &JointTable) -> Result<JointTable> {
    if mu.variables() == pdg.variables() {
        return Ok(mu.clone());
    }
    mu.reordered(pdg.variables()).map_err(|_| {
        Error::ShapeMismatch("the distribution must range over exactly the PDG's variables".into())
    })
}

/// Contribution of a single edge to the incompatibility.
pub fn edge_incompatibility(pdg: &Pdg, edge: &Edge, mu: &JointTable) -> Result<Score> {
    let mu = aligned(pdg, mu)?;
    let m = EdgeMarginals::new(pdg, edge, &mu)?;
    Ok(match edge.beta.finite() {
        None => {
            if m.matches(edge) {
                Score::ZERO
            } else {
                Score::INFINITE
            }
        }
        Some(beta) => beta * Score::nats(m.conditional_divergence(edge)),
    })
}

pub fn incompatibility(pdg: &Pdg, mu: &JointTable) -> Result<Score> {
    let mu = aligned(pdg, mu)?;
    let mut total = Score::ZERO;
    for edge in pdg.canonical_edges() {
        total = total + edge_incompatibility(pdg, edge, &mu)?;
    }
    Ok(total)
}

/// Information deficiency `−H(μ) + Σ α_L H_μ(Y|X)`; may be negative.
pub fn ideficiency(pdg: &Pdg, mu: &JointTable) -> Result<Score> {
    let mu = aligned(pdg, mu)?;
    let mut total = -mu.entropy();
    for edge in pdg.canonical_edges() {
        if edge.alpha == 0.0 {
            continue;
        }
        total += edge.alpha * EdgeMarginals::new(pdg, edge, &mu)?.conditional_entropy();
    }
    Ok(Score::nats(total))
}

/// `Inc + γ·IDef`.
pub fn gamma_score(pdg: &Pdg, mu: &JointTable, gamma: f64) -> Result<Score> {
    check_gamma(gamma)?;
    let inc = incompatibility(pdg, mu)?;
    if gamma == 0.0 || inc.is_infinite() {
        return Ok(inc);
    }
    Ok(inc + gamma * ideficiency(pdg, mu)?)
}

/// The γ-score as a single expectation over worlds `w ∼ μ`:
///
/// `E_w { Σ_L [ β_L log 1/p_L(y|x) + (γα_L − β_L) log 1/μ(y|x) ] − γ log 1/μ(w) }`.
///
/// Only defined when every confidence is finite.
pub fn gamma_score_expectation(pdg: &Pdg, mu: &JointTable, gamma: f64) -> Result<Score> {
    check_gamma(gamma)?;
    let hard: Vec<String> = pdg.edges().iter().filter(|e| e.is_hard()).map(|e| e.label.clone()).collect();
    if !hard.is_empty() {
        return Err(Error::AlternatePathUnavailable(hard));
    }
    let mu = aligned(pdg, mu)?;
    let layout = mu.layout();
    let probs = mu.probs();

    let mut per_cell = vec![0.0f64; probs.len()];
    for edge in pdg.canonical_edges() {
        let beta = edge.beta.finite().expect("checked finite");
        let (s, t) = pdg.edge_positions(edge)?;
        let mut st = s.clone();
        st.extend(&t);
        let proj = layout.projection(&st);
        let m = EdgeMarginals::new(pdg, edge, &mu)?;
        let middle = gamma * edge.alpha - beta;
        for (cell, &idx) in proj.iter().enumerate() {
            if probs[cell] <= 0.0 {
                continue;
            }
            let (r, c) = (idx / m.cols, idx % m.cols);
            let p = edge.cpd.prob(r, c);
            if beta > 0.0 {
                if p <= 0.0 {
                    return Ok(Score::INFINITE);
                }
                per_cell[cell] -= beta * p.ln();
            }
            if middle != 0.0 {
                let cond = m.joint[idx] / m.source[r];
                per_cell[cell] -= middle * cond.ln();
            }
        }
    }
    let mut total = 0.0;
    for (cell, &w) in probs.iter().enumerate() {
        if w > 0.0 {
            total += w * (per_cell[cell] + gamma * w.ln());
        }
    }
    Ok(Score::nats(total))
}

/// Variational free energy `E_μ[Σ_J θ_J log 1/φ_J] − H(μ)` for an explicit list
/// of weighted log-potentials, each given per joint cell.
pub fn variational_free_energy(mu: &JointTable, weighted_energies: &[(f64, Vec<f64>)]) -> Score {
    let mut total = -entropy(mu.probs());
    for (theta, energy) in weighted_energies {
        for (w, e) in mu.probs().iter().zip(energy) {
            if *w > 0.0 {
                if e.is_infinite() {
                    return Score::INFINITE;
                }
                total += theta * w * e;
            }
        }
    }
    Score::nats(total)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must be finite and nonnegative, got {gamma}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cpd, Variable};

    fn x() -> Variable {
        Variable::binary("X")
    }

    fn single(p: Vec<f64>, edge: impl FnOnce(Edge) -> Edge) -> Pdg {
        let cpd = Cpd::unconditional(x(), p).unwrap();
        Pdg::new(vec![x()], vec![edge(Edge::new("p", cpd))]).unwrap()
    }

    fn mu(p: Vec<f64>) -> JointTable {
        JointTable::new(vec![x()], p).unwrap()
    }

    #[test]
    fn exact_match_is_zero() {
        let pdg = single(vec![0.5, 0.5], |e| e);
        assert_eq!(incompatibility(&pdg, &mu(vec![0.5, 0.5])).unwrap(), Score::ZERO);
    }

    #[test]
    fn kl_against_skewed_belief() {
        let pdg = single(vec![0.25, 0.75], |e| e);
        let inc = incompatibility(&pdg, &mu(vec![0.5, 0.5])).unwrap().value();
        let direct = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((inc - direct).abs() < 1e-15);
        assert!((inc - 0.1438).abs() < 1e-4);
    }

    #[test]
    fn event_against_spread_mass_is_infinite() {
        let pdg = single(vec![1.0, 0.0], |e| e);
        assert!(incompatibility(&pdg, &mu(vec![0.5, 0.5])).unwrap().is_infinite());
        let hard = single(vec![1.0, 0.0], Edge::hard);
        assert!(incompatibility(&hard, &mu(vec![0.5, 0.5])).unwrap().is_infinite());
        assert_eq!(incompatibility(&hard, &mu(vec![1.0, 0.0])).unwrap(), Score::ZERO);
    }

    #[test]
    fn single_edge_ideficiency_vanishes() {
        let pdg = single(vec![0.3, 0.7], |e| e);
        assert!(ideficiency(&pdg, &mu(vec![0.2, 0.8])).unwrap().value().abs() < 1e-15);
    }

    #[test]
    fn two_edges_ideficiency() {
        let p = Cpd::unconditional(x(), vec![0.5, 0.5]).unwrap();
        let pdg = Pdg::new(vec![x()], vec![Edge::new("p", p.clone()), Edge::new("q", p)]).unwrap();
        let idef = ideficiency(&pdg, &mu(vec![0.5, 0.5])).unwrap().value();
        assert!((idef - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn no_edges_is_negative_entropy() {
        let vars = vec![Variable::binary("X"), Variable::binary("Y")];
        let pdg = Pdg::new(vars.clone(), vec![]).unwrap();
        let idef = ideficiency(&pdg, &JointTable::uniform(vars)).unwrap().value();
        assert!((idef + 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gamma_zero_is_incompatibility() {
        let pdg = single(vec![0.25, 0.75], |e| e);
        let m = mu(vec![0.6, 0.4]);
        assert_eq!(gamma_score(&pdg, &m, 0.0).unwrap(), incompatibility(&pdg, &m).unwrap());
    }

    #[test]
    fn gamma_two_consistent() {
        let pdg = single(vec![0.5, 0.5], |e| e);
        assert!(gamma_score(&pdg, &mu(vec![0.5, 0.5]), 2.0).unwrap().value().abs() < 1e-15);
    }

    #[test]
    fn expectation_form_rejects_hard_edges() {
        let pdg = single(vec![1.0, 0.0], Edge::hard);
        assert!(matches!(
            gamma_score_expectation(&pdg, &mu(vec![1.0, 0.0]), 1.0),
            Err(Error::AlternatePathUnavailable(_))
        ));
    }

    #[test]
    fn zero_mass_rows_are_skipped() {
        let (xv, yv) = (x(), Variable::binary("Y"));
        let h = Cpd::conditional(xv.clone(), yv.clone(), vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let pdg = Pdg::new(vec![xv.clone(), yv.clone()], vec![Edge::new("h", h).hard()]).unwrap();
        // row x1 has no mass, so its mismatch is irrelevant
        let m = JointTable::new(vec![xv, yv], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(incompatibility(&pdg, &m).unwrap(), Score::ZERO);
    }

    #[test]
    fn variable_order_is_irrelevant() {
        let (xv, yv) = (x(), Variable::binary("Y"));
        let h = Cpd::conditional(xv.clone(), yv.clone(), vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let pdg = Pdg::new(vec![xv.clone(), yv.clone()], vec![Edge::new("h", h)]).unwrap();
        let m = JointTable::new(vec![xv, yv.clone()], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let swapped = m.reordered(&[yv, x()]).unwrap();
        assert_eq!(gamma_score(&pdg, &m, 0.7).unwrap(), gamma_score(&pdg, &swapped, 0.7).unwrap());
    }
}
