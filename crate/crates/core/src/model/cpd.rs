use serde::Serialize;

use super::joint::JointTable;
use super::layout::Layout;
use super::variable::Variable;
use crate::error::{Error, Result};

/// Maximum row-sum deviation accepted when validating a cpd.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A conditional probability table `p(targets | sources)`.
///
/// Rows are indexed by source assignment and columns by target assignment,
/// both row-major in the declared variable order. An empty source list means
/// a single row: an unconditional distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cpd {
    sources: Vec<Variable>,
    targets: Vec<Variable>,
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl Cpd {
    pub fn new(sources: Vec<Variable>, targets: Vec<Variable>, table: Vec<f64>) -> Result<Cpd> {
        let describe = || describe(&sources, &targets);
        if targets.is_empty() {
            return Err(Error::InvalidCpd { name: describe(), reason: "no target variables".into() });
        }
        let mut names: Vec<&str> = sources.iter().chain(&targets).map(Variable::name).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCpd { name: describe(), reason: "a variable appears twice".into() });
        }
        let rows: usize = sources.iter().map(Variable::size).product();
        let cols: usize = targets.iter().map(Variable::size).product();
        if table.len() != rows * cols {
            return Err(Error::InvalidCpd {
                name: describe(),
                reason: format!("expected {rows} rows of {cols} entries, got {} entries", table.len()),
            });
        }
        for (r, row) in table.chunks(cols).enumerate() {
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidCpd { name: describe(), reason: format!("row {r} has entry {v}") });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidCpd { name: describe(), reason: format!("row {r} sums to {sum}") });
            }
        }
        Ok(Cpd { sources, targets, rows, cols, table })
    }

    pub fn unconditional(target: Variable, probs: Vec<f64>) -> Result<Cpd> {
        Cpd::new(Vec::new(), vec![target], probs)
    }

    pub fn conditional(source: Variable, target: Variable, rows: Vec<Vec<f64>>) -> Result<Cpd> {
        Cpd::new(vec![source], vec![target], rows.concat())
    }

    /// The event `var = value` as the point mass `δ_value`.
    pub fn point_mass(var: &Variable, value: &str) -> Result<Cpd> {
        let idx = var.index_of(value)?;
        let mut probs = vec![0.0; var.size()];
        probs[idx] = 1.0;
        Cpd::unconditional(var.clone(), probs)
    }

    /// A deterministic cpd from a map on assignment indices.
    pub fn function(sources: Vec<Variable>, targets: Vec<Variable>, f: impl Fn(usize) -> usize) -> Result<Cpd> {
        let rows: usize = sources.iter().map(Variable::size).product();
        let cols: usize = targets.iter().map(Variable::size).product();
        let mut table = vec![0.0; rows * cols];
        for r in 0..rows {
            let c = f(r);
            if c >= cols {
                return Err(Error::InvalidCpd { name: describe(&sources, &targets), reason: format!("row {r} maps to {c}") });
            }
            table[r * cols + c] = 1.0;
        }
        Cpd::new(sources, targets, table)
    }

    pub fn sources(&self) -> &[Variable] {
        &self.sources
    }

    pub fn targets(&self) -> &[Variable] {
        &self.targets
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.table[r * self.cols..(r + 1) * self.cols]
    }

    pub fn prob(&self, row: usize, col: usize) -> f64 {
        self.table[row * self.cols + col]
    }

    pub fn is_unconditional(&self) -> bool {
        self.sources.is_empty()
    }

    /// Every row is a point mass, i.e. the cpd is a function.
    pub fn is_degenerate(&self) -> bool {
        self.table.chunks(self.cols).all(|row| row.iter().filter(|&&v| v > 0.0).count() == 1)
    }

    /// For a degenerate cpd, the target column chosen by each row.
    pub fn as_function(&self) -> Option<Vec<usize>> {
        if !self.is_degenerate() {
            return None;
        }
        Some(self.table.chunks(self.cols).map(|row| row.iter().position(|&v| v > 0.0).unwrap()).collect())
    }

    pub fn source_layout(&self) -> Layout {
        Layout::new(self.sources.iter().map(Variable::size).collect())
    }

    pub fn target_layout(&self) -> Layout {
        Layout::new(self.targets.iter().map(Variable::size).collect())
    }

    /// `result(y) = Σ_x dist(x) · p(y|x)`.
    pub fn pushforward(&self, dist: &JointTable) -> Result<JointTable> {
        let same = dist.variables().len() == self.sources.len()
            && dist.variables().iter().zip(&self.sources).all(|(a, b)| a == b);
        if !same {
            return Err(Error::ShapeMismatch(format!(
                "pushforward expects a distribution over ({}), got ({})",
                names(&self.sources),
                names(dist.variables())
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &w) in dist.probs().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.row(r)) {
                *o += w * p;
            }
        }
        JointTable::new(self.targets.clone(), out)
    }

    /// The same table with targets relabelled onto other variables of equal shape.
    pub fn with_variables(&self, sources: Vec<Variable>, targets: Vec<Variable>) -> Result<Cpd> {
        Cpd::new(sources, targets, self.table.clone())
    }
}

pub(crate) fn names(vars: &[Variable]) -> String {
    vars.iter().map(Variable::name).collect::<Vec<_>>().join(",")
}

fn describe(sources: &[Variable], targets: &[Variable]) -> String {
    if sources.is_empty() {
        format!("p({})", names(targets))
    } else {
        format!("p({}|{})", names(targets), names(sources))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Variable {
        Variable::binary("X")
    }

    fn y() -> Variable {
        Variable::binary("Y")
    }

    #[test]
    fn rejects_unnormalized_row() {
        let err = Cpd::unconditional(x(), vec![0.6, 0.6]).unwrap_err();
        assert!(matches!(err, Error::InvalidCpd { .. }));
    }

    #[test]
    fn rejects_negative_entry() {
        assert!(Cpd::unconditional(x(), vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn tolerance_boundary() {
        assert!(Cpd::unconditional(x(), vec![0.5, 0.5 + 5e-10]).is_ok());
        assert!(Cpd::unconditional(x(), vec![0.5, 0.5 + 5e-9]).is_err());
    }

    #[test]
    fn degenerate_predicate() {
        assert!(Cpd::point_mass(&x(), "x1").unwrap().is_degenerate());
        let f = Cpd::function(vec![x()], vec![y()], |_| 0).unwrap();
        assert!(f.is_degenerate());
        assert_eq!(f.as_function().unwrap(), vec![0, 0]);
        assert!(!Cpd::unconditional(x(), vec![0.5, 0.5]).unwrap().is_degenerate());
    }

    #[test]
    fn pushforward_identity() {
        let id = Cpd::function(vec![x()], vec![y()], |r| r).unwrap();
        let p = JointTable::new(vec![x()], vec![0.3, 0.7]).unwrap();
        assert_eq!(id.pushforward(&p).unwrap().probs(), &[0.3, 0.7]);
    }

    #[test]
    fn pushforward_constant_map() {
        let f = Cpd::function(vec![x()], vec![y()], |_| 0).unwrap();
        let p = JointTable::new(vec![x()], vec![0.2, 0.8]).unwrap();
        assert_eq!(f.pushforward(&p).unwrap().probs(), &[1.0, 0.0]);
    }

    #[test]
    fn pushforward_mixes_rows() {
        let f = Cpd::conditional(x(), y(), vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let p = JointTable::new(vec![x()], vec![0.5, 0.5]).unwrap();
        let out = f.pushforward(&p).unwrap();
        assert!((out.probs()[0] - 0.55).abs() < 1e-15);
        assert!((out.probs()[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn pushforward_shape_mismatch() {
        let f = Cpd::conditional(x(), y(), vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let p = JointTable::new(vec![y()], vec![0.5, 0.5]).unwrap();
        assert!(matches!(f.pushforward(&p), Err(Error::ShapeMismatch(_))));
    }
}
