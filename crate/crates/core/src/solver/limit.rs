//! `lim_{γ→∞} ⟨M⟩_γ` when the hard edges fix a unique qualitative optimum.
//!
//! If the hard edges (with `α = 1`) can be ordered so that each one's sources
//! are targets of earlier ones, and together they target every variable, then
//! their information deficiency is a sum of conditional mutual informations.
//! It vanishes exactly at the product `μ* = ∏ p_L`, which the limit selects.

use super::family::hard_order;
use crate::error::{Error, Result};
use crate::model::{JointTable, Pdg};
use crate::score::Score;
use crate::scoring::{edge_incompatibility, ideficiency};

/// The unique distribution selected in the `γ → ∞` limit.
pub fn limit_joint(pdg: &Pdg) -> Result<JointTable> {
    let order = hard_order(pdg)?;
    let layout = pdg.layout();
    let mut covered = vec![false; pdg.variables().len()];
    let mut probs = vec![1.0; layout.len()];
    for edge in &order {
        if edge.alpha != 1.0 {
            return Err(Error::AmbiguousStructure(format!("hard edge `{}` has alpha {} (need 1)", edge.label, edge.alpha)));
        }
        let (s, t) = pdg.edge_positions(edge)?;
        if let Some(&p) = s.iter().find(|&&p| !covered[p]) {
            return Err(Error::AmbiguousStructure(format!(
                "source `{}` of hard edge `{}` is not determined by earlier hard edges",
                pdg.variables()[p].name(),
                edge.label
            )));
        }
        let sp = layout.projection(&s);
        let tp = layout.projection(&t);
        for (c, pr) in probs.iter_mut().enumerate() {
            *pr *= edge.cpd.prob(sp[c], tp[c]);
        }
        for p in t {
            covered[p] = true;
        }
    }
    if let Some(p) = covered.iter().position(|c| !c) {
        return Err(Error::AmbiguousStructure(format!(
            "variable `{}` is not the target of any hard edge",
            pdg.variables()[p].name()
        )));
    }
    JointTable::new(pdg.variables().to_vec(), probs)
}

pub fn limit_gamma_inf(pdg: &Pdg) -> Result<Score> {
    let mu = limit_joint(pdg)?;
    if ideficiency(pdg, &mu)?.value() > 1e-12 {
        return Ok(Score::INFINITE);
    }
    let mut total = Score::ZERO;
    for edge in pdg.canonical_edges().into_iter().filter(|e| !e.is_hard()) {
        total = total + edge_incompatibility(pdg, edge, &mu)?;
    }
    Ok(total)
}
