use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use super::cpd::Cpd;
use super::layout::Layout;
use super::variable::Variable;
use crate::error::{Error, Result};

/// Default cap on the number of cells in a dense joint table.
pub const DEFAULT_MAX_CELLS: usize = 10_000_000;

/// Confidence `β` in an edge: a nonnegative real or `∞` (a hard constraint).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Confidence {
    Finite(f64),
    Infinite,
}

impl Confidence {
    pub fn new(beta: f64) -> Result<Confidence> {
        if beta == f64::INFINITY {
            Ok(Confidence::Infinite)
        } else if beta.is_finite() && beta >= 0.0 {
            Ok(Confidence::Finite(beta))
        } else {
            Err(Error::InvalidArgument(format!("confidence must be nonnegative, got {beta}")))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Confidence::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Confidence::Finite(b) => Some(b),
            Confidence::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Confidence::Finite(b) => b,
            Confidence::Infinite => f64::INFINITY,
        }
    }
}

impl Default for Confidence {
    fn default() -> Self {
        Confidence::Finite(1.0)
    }
}

impl PartialOrd for Confidence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Confidence::Finite(b) => write!(f, "{b}"),
            Confidence::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Confidence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Confidence::Finite(b) => s.serialize_f64(*b),
            Confidence::Infinite => s.serialize_str("inf"),
        }
    }
}

/// A labelled hyperedge carrying a cpd, a confidence `β`, and a structural weight `α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub label: String,
    pub cpd: Cpd,
    pub beta: Confidence,
    pub alpha: f64,
}

impl Edge {
    /// An edge with the default weights `β = 1`, `α = 1`.
    pub fn new<S: Into<String>>(label: S, cpd: Cpd) -> Edge {
        Edge { label: label.into(), cpd, beta: Confidence::default(), alpha: 1.0 }
    }

    pub fn with_beta(mut self, beta: f64) -> Edge {
        self.beta = Confidence::new(beta).expect("nonnegative confidence");
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Edge {
        self.alpha = alpha;
        self
    }

    pub fn hard(mut self) -> Edge {
        self.beta = Confidence::Infinite;
        self
    }

    pub fn is_hard(&self) -> bool {
        self.beta.is_infinite()
    }

    pub fn source_names(&self) -> Vec<&str> {
        self.cpd.sources().iter().map(Variable::name).collect()
    }

    pub fn target_names(&self) -> Vec<&str> {
        self.cpd.targets().iter().map(Variable::name).collect()
    }
}

/// A probabilistic dependency graph over finite discrete variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pdg {
    variables: Vec<Variable>,
    edges: Vec<Edge>,
}

impl Pdg {
    pub fn new(variables: Vec<Variable>, edges: Vec<Edge>) -> Result<Pdg> {
        let mut by_name: HashMap<&str, &Variable> = HashMap::new();
        for v in &variables {
            if by_name.insert(v.name(), v).is_some() {
                return Err(Error::DuplicateVariable(v.name().to_string()));
            }
        }
        let mut labels = HashSet::new();
        for e in &edges {
            if !labels.insert(e.label.as_str()) {
                return Err(Error::DuplicateLabel(e.label.clone()));
            }
            if !(e.alpha.is_finite() && e.alpha >= 0.0) {
                return Err(Error::InvalidArgument(format!("edge `{}` has alpha {}", e.label, e.alpha)));
            }
            for v in e.cpd.sources().iter().chain(e.cpd.targets()) {
                match by_name.get(v.name()) {
                    None => return Err(Error::UnknownVariable(v.name().to_string())),
                    Some(decl) if *decl != v => {
                        return Err(Error::ShapeMismatch(format!(
                            "edge `{}` uses variable `{}` with a different domain",
                            e.label,
                            v.name()
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Pdg { variables, edges })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables.iter().find(|v| v.name() == name).ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.variables.iter().position(|v| v.name() == name).ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges sorted by label; all scoring accumulates in this order.
    pub fn canonical_edges(&self) -> Vec<&Edge> {
        let mut edges: Vec<&Edge> = self.edges.iter().collect();
        edges.sort_by(|a, b| a.label.cmp(&b.label));
        edges
    }

    pub fn edge(&self, label: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.label == label)
    }

    pub fn with_edge(&self, edge: Edge) -> Result<Pdg> {
        let mut edges = self.edges.clone();
        edges.push(edge);
        Pdg::new(self.variables.clone(), edges)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.variables.iter().map(Variable::size).collect())
    }

    pub fn cell_count(&self) -> u128 {
        self.variables.iter().map(|v| v.size() as u128).product()
    }

    pub fn check_cells(&self, cap: usize) -> Result<usize> {
        let cells = self.cell_count();
        if cells > cap as u128 {
            return Err(Error::StateSpaceTooLarge { cells, cap });
        }
        Ok(cells as usize)
    }

    /// Variable positions of an edge's sources and targets in this PDG's order.
    pub fn edge_positions(&self, edge: &Edge) -> Result<(Vec<usize>, Vec<usize>)> {
        let s = edge.cpd.sources().iter().map(|v| self.position(v.name())).collect::<Result<_>>()?;
        let t = edge.cpd.targets().iter().map(|v| self.position(v.name())).collect::<Result<_>>()?;
        Ok((s, t))
    }

    /// Structural equality up to edge order, with cpd entries compared to `tol`.
    pub fn equivalent(&self, other: &Pdg, tol: f64) -> bool {
        let mut a: Vec<&Variable> = self.variables.iter().collect();
        let mut b: Vec<&Variable> = other.variables.iter().collect();
        a.sort_by(|x, y| x.name().cmp(y.name()));
        b.sort_by(|x, y| x.name().cmp(y.name()));
        if a != b || self.edges.len() != other.edges.len() {
            return false;
        }
        self.canonical_edges().into_iter().zip(other.canonical_edges()).all(|(x, y)| {
            x.label == y.label
                && x.beta == y.beta
                && (x.alpha - y.alpha).abs() <= tol
                && x.cpd.sources() == y.cpd.sources()
                && x.cpd.targets() == y.cpd.targets()
                && x.cpd.table().iter().zip(y.cpd.table()).all(|(p, q)| (p - q).abs() <= tol)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Variable {
        Variable::binary("X")
    }

    #[test]
    fn minimal_pdg() {
        let p = Cpd::unconditional(x(), vec![0.5, 0.5]).unwrap();
        let pdg = Pdg::new(vec![x()], vec![Edge::new("p", p)]).unwrap();
        assert_eq!(pdg.variables().len(), 1);
        assert_eq!(pdg.edges().len(), 1);
    }

    #[test]
    fn unknown_variable() {
        let z = Variable::binary("Z");
        let p = Cpd::unconditional(z, vec![0.5, 0.5]).unwrap();
        assert_eq!(Pdg::new(vec![x()], vec![Edge::new("p", p)]).unwrap_err(), Error::UnknownVariable("Z".into()));
    }

    #[test]
    fn duplicate_label() {
        let p = Cpd::unconditional(x(), vec![0.5, 0.5]).unwrap();
        let err = Pdg::new(vec![x()], vec![Edge::new("p", p.clone()), Edge::new("p", p)]).unwrap_err();
        assert_eq!(err, Error::DuplicateLabel("p".into()));
    }

    #[test]
    fn domain_mismatch() {
        let p = Cpd::unconditional(Variable::indexed("X", 3), vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(Pdg::new(vec![x()], vec![Edge::new("p", p)]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn infinite_confidence_dominates() {
        assert!(Confidence::Infinite > Confidence::Finite(1e300));
        assert!(Confidence::Finite(1.0) < Confidence::Finite(2.0));
        assert!(Confidence::new(-1.0).is_err());
    }

    #[test]
    fn state_space_cap() {
        let vars: Vec<Variable> = (0..8).map(|i| Variable::indexed(format!("V{i}"), 10)).collect();
        let pdg = Pdg::new(vars, vec![]).unwrap();
        assert!(matches!(pdg.check_cells(DEFAULT_MAX_CELLS), Err(Error::StateSpaceTooLarge { .. })));
        assert_eq!(pdg.check_cells(usize::MAX).unwrap(), 100_000_000);
    }
}
