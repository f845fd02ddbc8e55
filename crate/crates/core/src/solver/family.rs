//! Structural treatment of hard (`β = ∞`) edges.
//!
//! Hard edges must have pairwise-disjoint targets and form an acyclic
//! source→target structure. When they are visited in topological order and
//! every hard cpd's sources are already covered, the hard edges may pin the
//! joint marginal on the covered variables to the product `∏ p_L(T_L | S_L)`.
//! That product is the *only* feasible marginal when, at every step, either
//! the new cpd is a function of its sources or the covered variables are
//! determined by the sources. Then the remaining freedom is the conditional
//! `ν(free | pinned)`. Otherwise the hard edges leave a coupling free and the
//! feasible set is handled by iterative I-projection.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Edge, Layout, Pdg, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// No hard edges: the whole joint is free.
    Free,
    /// Hard edges fix the marginal on the covered variables.
    Pinned,
    /// Hard edges constrain conditionals but leave couplings free.
    Coupled,
}

/// The set of joint distributions with finite score on every hard edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibleFamily {
    pub kind: FamilyKind,
    /// Hard edge labels in topological order.
    pub hard_edges: Vec<String>,
    /// Variables targeted by some hard edge, in PDG order.
    pub pinned_variables: Vec<String>,
    /// All other variables, in PDG order.
    pub free_variables: Vec<String>,
    /// Dimension of the free block for `Free` and `Pinned` families.
    pub free_dimensions: Option<usize>,
    /// For `Pinned`: the fixed marginal over `pinned_variables`.
    #[serde(skip)]
    pub(crate) pinned_mass: Option<Vec<f64>>,
}

impl FeasibleFamily {
    pub fn is_fully_pinned(&self) -> bool {
        self.free_dimensions == Some(0)
    }
}

pub fn feasible_family(pdg: &Pdg) -> Result<FeasibleFamily> {
    let order = hard_order(pdg)?;
    let hard_edges: Vec<String> = order.iter().map(|e| e.label.clone()).collect();
    let covered: HashSet<&str> = order.iter().flat_map(|e| e.target_names()).collect();
    let (pinned_variables, free_variables): (Vec<&Variable>, Vec<&Variable>) =
        pdg.variables().iter().partition(|v| covered.contains(v.name()));
    let names = |vs: &[&Variable]| vs.iter().map(|v| v.name().to_string()).collect::<Vec<_>>();

    if order.is_empty() {
        let cells: usize = pdg.variables().iter().map(Variable::size).product();
        return Ok(FeasibleFamily {
            kind: FamilyKind::Free,
            hard_edges,
            pinned_variables: Vec::new(),
            free_variables: names(&free_variables),
            free_dimensions: Some(cells - 1),
            pinned_mass: None,
        });
    }

    let pinned_mass = pinned_product(pdg, &order, &pinned_variables)?;
    let (kind, free_dimensions) = match &pinned_mass {
        Some(mass) => {
            let free_cells: usize = free_variables.iter().map(|v| v.size()).product();
            let blocks = mass.iter().filter(|&&m| m > 0.0).count();
            (FamilyKind::Pinned, Some(blocks * (free_cells - 1)))
        }
        None => (FamilyKind::Coupled, None),
    };
    Ok(FeasibleFamily {
        kind,
        hard_edges,
        pinned_variables: names(&pinned_variables),
        free_variables: names(&free_variables),
        free_dimensions,
        pinned_mass,
    })
}

/// Hard edges in topological order (ties broken by label), after checking
/// disjoint targets and acyclicity.
pub(crate) fn hard_order(pdg: &Pdg) -> Result<Vec<&Edge>> {
    let hard: Vec<&Edge> = pdg.canonical_edges().into_iter().filter(|e| e.is_hard()).collect();
    for (i, a) in hard.iter().enumerate() {
        for b in &hard[i + 1..] {
            let ta: HashSet<&str> = a.target_names().into_iter().collect();
            if b.target_names().iter().any(|t| ta.contains(t)) {
                return Err(Error::UnsupportedHardStructure {
                    edges: vec![a.label.clone(), b.label.clone()],
                    reason: "hard edges with overlapping targets".into(),
                });
            }
        }
    }
    let mut done: Vec<bool> = vec![false; hard.len()];
    let mut order = Vec::with_capacity(hard.len());
    while order.len() < hard.len() {
        // an edge is ready once no other pending hard edge targets one of its sources
        let ready = (0..hard.len()).find(|&i| {
            !done[i]
                && hard[i].source_names().iter().all(|s| {
                    (0..hard.len()).all(|j| done[j] || j == i || !hard[j].target_names().contains(s))
                })
        });
        match ready {
            Some(i) => {
                done[i] = true;
                order.push(hard[i]);
            }
            None => {
                let pending = (0..hard.len()).filter(|&i| !done[i]).map(|i| hard[i].label.clone()).collect();
                return Err(Error::UnsupportedHardStructure {
                    edges: pending,
                    reason: "cyclic hard edges".into(),
                });
            }
        }
    }
    Ok(order)
}

/// The pinned marginal `∏ p_L` over `pinned` (PDG order) if it is the unique
/// feasible marginal; `None` otherwise.
fn pinned_product(pdg: &Pdg, order: &[&Edge], pinned: &[&Variable]) -> Result<Option<Vec<f64>>> {
    let pinned_pos: Vec<usize> = pinned.iter().map(|v| pdg.position(v.name())).collect::<Result<_>>()?;
    let layout = Layout::new(pinned.iter().map(|v| v.size()).collect());
    let local = |name: &str| pinned.iter().position(|v| v.name() == name).expect("covered variable");

    // mass over pinned cells restricted to the variables covered so far,
    // tracked on the full pinned layout (uncovered digits are ignored)
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut mass = vec![1.0; layout.len()];
    for edge in order {
        let sources: Vec<usize> = edge.source_names().iter().map(|s| local_or_none(pinned, s)).collect::<Option<_>>().unwrap_or_default();
        if sources.len() != edge.cpd.sources().len() || !sources.iter().all(|s| covered.contains(s)) {
            return Ok(None);
        }
        let targets: Vec<usize> = edge.target_names().iter().map(|t| local(t)).collect();
        let src_proj = layout.projection(&sources);
        let tgt_proj = layout.projection(&targets);
        let covered_vec: Vec<usize> = covered.iter().copied().collect();
        let cov_proj = layout.projection(&covered_vec);

        // uniqueness: a function of its sources, or covered variables determined by sources
        let functional = (0..edge.cpd.rows()).all(|r| {
            let positive_row = (0..layout.len()).any(|c| src_proj[c] == r && mass[c] > 0.0);
            !positive_row || edge.cpd.row(r).iter().filter(|&&p| p > 0.0).count() == 1
        });
        if !functional {
            let mut seen: Vec<Option<usize>> = vec![None; edge.cpd.rows()];
            for c in 0..layout.len() {
                if mass[c] <= 0.0 {
                    continue;
                }
                match seen[src_proj[c]] {
                    None => seen[src_proj[c]] = Some(cov_proj[c]),
                    Some(prev) if prev != cov_proj[c] => return Ok(None),
                    Some(_) => {}
                }
            }
        }
        for c in 0..layout.len() {
            mass[c] *= edge.cpd.prob(src_proj[c], tgt_proj[c]);
        }
        covered.extend(targets);
    }
    debug_assert_eq!(covered.len(), pinned_pos.len());
    Ok(Some(mass))
}

fn local_or_none(pinned: &[&Variable], name: &str) -> Option<usize> {
    pinned.iter().position(|v| v.name() == name)
}
