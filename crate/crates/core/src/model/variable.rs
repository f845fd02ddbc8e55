use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};

/// A finite discrete variable with an ordered domain of value labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Variable {
    name: String,
    domain: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, domain: Vec<String>) -> Result<Variable> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidArgument("variable name is empty".into()));
        }
        if domain.is_empty() {
            return Err(Error::InvalidArgument(format!("variable `{name}` has an empty domain")));
        }
        let mut seen = HashSet::new();
        for v in &domain {
            if !seen.insert(v.as_str()) {
                return Err(Error::DuplicateLabel(format!("{name}.{v}")));
            }
        }
        Ok(Variable { name, domain })
    }

    /// Domain labels are the lowercased name followed by an index: `X` gets `x0, x1, ...`.
    pub fn indexed<S: Into<String>>(name: S, size: usize) -> Variable {
        let name = name.into();
        let stem = name.to_lowercase();
        let domain = (0..size.max(1)).map(|i| format!("{stem}{i}")).collect();
        Variable { name, domain }
    }

    pub fn binary<S: Into<String>>(name: S) -> Variable {
        Variable::indexed(name, 2)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn index_of(&self, value: &str) -> Result<usize> {
        self.domain
            .iter()
            .position(|v| v == value)
            .ok_or_else(|| Error::UnknownValue { variable: self.name.clone(), value: value.to_string() })
    }
}
