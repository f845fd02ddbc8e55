use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Cpd, JointTable, Layout, Variable};

/// A finite list of records over some variables, each record an assignment
/// of value indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    variables: Vec<Variable>,
    records: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, records: Vec<Vec<usize>>) -> Result<Dataset> {
        if records.is_empty() {
            let name = variables.iter().map(Variable::name).collect::<Vec<_>>().join(",");
            return Err(Error::EmptyDataset(name));
        }
        for r in &records {
            if r.len() != variables.len() || r.iter().zip(&variables).any(|(&i, v)| i >= v.size()) {
                return Err(Error::ShapeMismatch(format!("record {r:?} does not fit the dataset's variables")));
            }
        }
        Ok(Dataset { variables, records })
    }

    /// Records given by value labels.
    pub fn from_labels<S: AsRef<str>>(variables: Vec<Variable>, records: &[Vec<S>]) -> Result<Dataset> {
        let records = records
            .iter()
            .map(|r| {
                if r.len() != variables.len() {
                    return Err(Error::ShapeMismatch(format!("record has {} values, expected {}", r.len(), variables.len())));
                }
                r.iter().zip(&variables).map(|(v, var)| var.index_of(v.as_ref())).collect()
            })
            .collect::<Result<_>>()?;
        Dataset::new(variables, records)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn records(&self) -> &[Vec<usize>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn layout(&self) -> Layout {
        Layout::new(self.variables.iter().map(Variable::size).collect())
    }

    /// Record index in the joint layout of the dataset's variables.
    pub fn cell(&self, record: &[usize]) -> usize {
        self.layout().index(record)
    }

    pub fn counts(&self) -> Vec<u64> {
        let layout = self.layout();
        let mut counts = vec![0u64; layout.len()];
        for r in &self.records {
            counts[layout.index(r)] += 1;
        }
        counts
    }

    /// The empirical distribution `D̂(x) = count(x) / m`.
    pub fn empirical(&self) -> JointTable {
        let m = self.records.len() as f64;
        let probs = self.counts().into_iter().map(|c| c as f64 / m).collect();
        JointTable::new(self.variables.clone(), probs).expect("counts sum to m")
    }

    /// `D̂` as an unconditional cpd over all of the dataset's variables.
    pub fn cpd(&self) -> Cpd {
        Cpd::new(Vec::new(), self.variables.clone(), self.empirical().probs().to_vec()).expect("empirical table is normalized")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirds_are_exact() {
        let x = Variable::new("X", vec!["a".into(), "b".into()]).unwrap();
        let d = Dataset::from_labels(vec![x], &[vec!["a"], vec!["a"], vec!["b"]]).unwrap();
        assert_eq!(d.empirical().probs(), &[2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(d.counts(), vec![2, 1]);
    }

    #[test]
    fn empty_rejected() {
        let x = Variable::binary("X");
        assert!(matches!(Dataset::new(vec![x], vec![]), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn bad_record_rejected() {
        let x = Variable::binary("X");
        assert!(Dataset::new(vec![x], vec![vec![2]]).is_err());
    }
}
