use serde::Serialize;

use super::cpd::{names, Cpd};
use super::layout::Layout;
use super::variable::Variable;
use crate::error::{Error, Result};

/// Maximum deviation of a joint table's total mass from one.
pub const JOINT_SUM_TOLERANCE: f64 = 1e-10;

/// A dense probability table over the product of its variables' domains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTable {
    variables: Vec<Variable>,
    probs: Vec<f64>,
    #[serde(skip)]
    layout: Layout,
}

impl JointTable {
    pub fn new(variables: Vec<Variable>, probs: Vec<f64>) -> Result<JointTable> {
        let layout = Layout::new(variables.iter().map(Variable::size).collect());
        if probs.len() != layout.len() {
            return Err(Error::ShapeMismatch(format!(
                "joint over ({}) needs {} entries, got {}",
                names(&variables),
                layout.len(),
                probs.len()
            )));
        }
        if let Some(v) = probs.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NotASimplex(format!("entry {v}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > JOINT_SUM_TOLERANCE {
            return Err(Error::NotASimplex(format!("entries sum to {sum}")));
        }
        Ok(JointTable { variables, probs, layout })
    }

    /// Normalizes nonnegative weights; fails if they are all zero.
    pub fn from_weights(variables: Vec<Variable>, weights: Vec<f64>) -> Result<JointTable> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::NotASimplex(format!("weights sum to {sum}")));
        }
        JointTable::new(variables, weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(variables: Vec<Variable>) -> JointTable {
        let n: usize = variables.iter().map(Variable::size).product();
        JointTable::new(variables, vec![1.0 / n as f64; n]).expect("uniform table is normalized")
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.position(n.as_ref())).collect()
    }

    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.probs[self.layout.index(assignment)]
    }

    /// Sums out every variable not in `subset`; the result follows `subset`'s order.
    pub fn marginal<S: AsRef<str>>(&self, subset: &[S]) -> Result<JointTable> {
        let pos = self.positions(subset)?;
        let vars: Vec<Variable> = pos.iter().map(|&p| self.variables[p].clone()).collect();
        let layout = Layout::new(vars.iter().map(Variable::size).collect());
        let mut out = vec![0.0; layout.len()];
        for (cell, idx) in self.layout.projection(&pos).into_iter().enumerate() {
            out[idx] += self.probs[cell];
        }
        Ok(JointTable { variables: vars, probs: out, layout })
    }

    /// `μ(targets | sources)`. Rows whose source assignment has zero mass are `None`.
    pub fn conditional<S: AsRef<str>, T: AsRef<str>>(&self, targets: &[S], sources: &[T]) -> Result<Conditional> {
        let tpos = self.positions(targets)?;
        let spos = self.positions(sources)?;
        if tpos.iter().any(|t| spos.contains(t)) {
            return Err(Error::InvalidArgument("conditional targets and sources overlap".into()));
        }
        let mut joint_pos = spos.clone();
        joint_pos.extend(&tpos);
        let joint = self.marginal(&joint_pos.iter().map(|&p| self.variables[p].name()).collect::<Vec<_>>())?;
        let tsize: usize = tpos.iter().map(|&p| self.variables[p].size()).product();
        let rows = joint
            .probs
            .chunks(tsize)
            .map(|row| {
                let mass: f64 = row.iter().sum();
                (mass > 0.0).then(|| row.iter().map(|v| v / mass).collect())
            })
            .collect();
        Ok(Conditional {
            sources: spos.iter().map(|&p| self.variables[p].clone()).collect(),
            targets: tpos.iter().map(|&p| self.variables[p].clone()).collect(),
            rows,
        })
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// The same distribution with variables permuted into `order`.
    pub fn reordered(&self, order: &[Variable]) -> Result<JointTable> {
        if order.len() != self.variables.len() {
            return Err(Error::ShapeMismatch("reorder needs the same variable set".into()));
        }
        let pos = self.positions(&order.iter().map(Variable::name).collect::<Vec<_>>())?;
        for (p, v) in pos.iter().zip(order) {
            if &self.variables[*p] != v {
                return Err(Error::ShapeMismatch(format!("variable `{}` has a different domain", v.name())));
            }
        }
        let layout = Layout::new(order.iter().map(Variable::size).collect());
        let mut out = vec![0.0; self.probs.len()];
        for (cell, idx) in self.layout.projection(&pos).into_iter().enumerate() {
            out[idx] = self.probs[cell];
        }
        Ok(JointTable { variables: order.to_vec(), probs: out, layout })
    }

    pub fn total_variation(&self, other: &JointTable) -> Result<f64> {
        let other = other.reordered(&self.variables)?;
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

pub(crate) fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// A conditional extracted from a joint table, with undefined zero-mass rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub sources: Vec<Variable>,
    pub targets: Vec<Variable>,
    pub rows: Vec<Option<Vec<f64>>>,
}

impl Conditional {
    pub fn row(&self, r: usize) -> Option<&[f64]> {
        self.rows[r].as_deref()
    }

    pub fn is_defined(&self, r: usize) -> bool {
        self.rows[r].is_some()
    }

    /// Converts to a cpd, filling undefined rows with the uniform distribution.
    pub fn to_cpd(&self) -> Result<Cpd> {
        let cols: usize = self.targets.iter().map(Variable::size).product();
        let table = self
            .rows
            .iter()
            .flat_map(|r| r.clone().unwrap_or_else(|| vec![1.0 / cols as f64; cols]))
            .collect();
        Cpd::new(self.sources.clone(), self.targets.clone(), table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy(probs: Vec<f64>) -> JointTable {
        JointTable::new(vec![Variable::binary("X"), Variable::binary("Y")], probs).unwrap()
    }

    #[test]
    fn marginal_of_uniform() {
        let m = xy(vec![0.25; 4]).marginal(&["X"]).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn marginal_column_sums() {
        let m = xy(vec![0.1, 0.2, 0.3, 0.4]).marginal(&["Y"]).unwrap();
        assert!((m.probs()[0] - 0.4).abs() < 1e-15);
        assert!((m.probs()[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn marginal_on_everything_is_identity() {
        let j = xy(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(j.marginal(&["X", "Y"]).unwrap(), j);
    }

    #[test]
    fn marginal_unknown_variable() {
        assert!(matches!(xy(vec![0.25; 4]).marginal(&["Z"]), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn conditional_of_product() {
        let j = xy(vec![0.15, 0.35, 0.15, 0.35]);
        let c = j.conditional(&["Y"], &["X"]).unwrap();
        for r in 0..2 {
            let row = c.row(r).unwrap();
            assert!((row[0] - 0.3).abs() < 1e-12 && (row[1] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_normalizes_row() {
        let c = xy(vec![0.1, 0.2, 0.3, 0.4]).conditional(&["Y"], &["X"]).unwrap();
        let row = c.row(0).unwrap();
        assert!((row[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((row[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_zero_mass_row_is_undefined() {
        let c = xy(vec![0.4, 0.6, 0.0, 0.0]).conditional(&["Y"], &["X"]).unwrap();
        assert!(c.is_defined(0));
        assert!(!c.is_defined(1));
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            JointTable::new(vec![Variable::binary("X")], vec![0.5, 0.6]),
            Err(Error::NotASimplex(_))
        ));
    }

    #[test]
    fn reorder_round_trip() {
        let j = xy(vec![0.1, 0.2, 0.3, 0.4]);
        let r = j.reordered(&[Variable::binary("Y"), Variable::binary("X")]).unwrap();
        assert_eq!(r.probs(), &[0.1, 0.3, 0.2, 0.4]);
        assert_eq!(r.reordered(j.variables()).unwrap(), j);
    }
}
