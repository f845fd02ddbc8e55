//! A line-oriented text format for PDGs, datasets, and factor graphs.
//!
//! ```text
//! # comments start with '#'
//! var X {x0, x1}
//! var Y {y0, y1}
//! cpd p : -> X = [0.25, 0.75]
//! cpd h : X -> Y = [[0.9, 0.1], [0.2, 0.8]]
//! edge p beta=1 alpha=1
//! edge h beta=inf
//! event X = x0 beta=inf
//! data D over (X, Y) { (x0, y0), (x0, y1) }
//! factor J over (X) = [1, 3] theta=1
//! values f over (X) = [0.5, -1.5]
//! query inconsistency gamma=0
//! ```
//!
//! Conditional tables list one row per source assignment, in row-major
//! order of the declared sources. Brackets may span lines.

mod parse;
mod write;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::factor_graph::{Factor, WeightedFactorGraph};
use crate::losses::Dataset;
use crate::model::{Cpd, Edge, Pdg, Variable, ROW_SUM_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DslErrorKind {
    Syntax,
    Semantic,
    DuplicateName,
}

impl fmt::Display for DslErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DslErrorKind::Syntax => "syntax error",
            DslErrorKind::Semantic => "semantic error",
            DslErrorKind::DuplicateName => "duplicate name",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{line}:{column}: {kind} at `{token}`: {message}")]
pub struct DslError {
    pub kind: DslErrorKind,
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

impl DslError {
    fn new(kind: DslErrorKind, span: Span, token: impl Into<String>, message: impl Into<String>) -> DslError {
        DslError { kind, line: span.line, column: span.column, token: token.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Table {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl Table {
    fn rows(&self) -> Vec<&[f64]> {
        match self {
            Table::Flat(v) => vec![v.as_slice()],
            Table::Rows(r) => r.iter().map(Vec::as_slice).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Param {
    Number(f64),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Item {
    Var { name: String, domain: Vec<String> },
    Cpd { name: String, sources: Vec<String>, targets: Vec<String>, table: Table },
    Edge { name: String, beta: f64, alpha: f64 },
    Event { variable: String, value: String, beta: f64, alpha: f64 },
    Data { name: String, variables: Vec<String>, records: Vec<Vec<String>> },
    Factor { name: String, scope: Vec<String>, values: Vec<f64>, theta: f64 },
    Values { name: String, scope: Vec<String>, values: Vec<f64> },
    Query { kind: String, params: Vec<(String, Param)> },
}

impl Item {
    /// The name used for ordering and duplicate detection.
    pub fn name(&self) -> String {
        match self {
            Item::Var { name, .. }
            | Item::Cpd { name, .. }
            | Item::Edge { name, .. }
            | Item::Data { name, .. }
            | Item::Factor { name, .. }
            | Item::Values { name, .. } => name.clone(),
            Item::Event { variable, value, .. } => format!("{variable}={value}"),
            Item::Query { kind, .. } => kind.clone(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Item::Var { .. } => 0,
            Item::Cpd { .. } => 1,
            Item::Values { .. } => 2,
            Item::Data { .. } => 3,
            Item::Factor { .. } => 4,
            Item::Edge { .. } => 5,
            Item::Event { .. } => 6,
            Item::Query { .. } => 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Declaration {
    pub span: Span,
    pub item: Item,
}

/// A parsed and validated document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    declarations: Vec<Declaration>,
}

type Built<T> = Result<T, DslError>;

/// Parses and validates `text`.
pub fn parse(text: &str) -> Built<Document> {
    let doc = Document { declarations: parse::declarations(text)? };
    doc.validate()?;
    Ok(doc)
}

/// Canonical text of a document.
pub fn serialize(doc: &Document) -> String {
    write::document(doc)
}

fn semantic(d: &Declaration, message: impl Into<String>) -> DslError {
    DslError::new(DslErrorKind::Semantic, d.span, d.item.name(), message)
}

fn product(sizes: impl Iterator<Item = usize>) -> Option<usize> {
    sizes.into_iter().try_fold(1usize, |acc, s| acc.checked_mul(s))
}

impl Document {
    pub fn declarations(&self) -> &[Declaration] {
        &self.declarations
    }

    pub fn items(&self) -> impl Iterator<Item = &Item> {
        self.declarations.iter().map(|d| &d.item)
    }

    /// Declarations in canonical order: by kind, then by name.
    pub fn canonical(&self) -> Vec<&Declaration> {
        let mut out: Vec<&Declaration> = self.declarations.iter().collect();
        out.sort_by(|a, b| {
            let key = |d: &Declaration| (d.item.rank(), if matches!(d.item, Item::Query { .. }) { String::new() } else { d.item.name() });
            key(a).cmp(&key(b))
        });
        out
    }

    fn find(&self, pred: impl Fn(&Item) -> bool) -> Option<&Declaration> {
        self.declarations.iter().find(|d| pred(&d.item))
    }

    fn validate(&self) -> Built<()> {
        let mut vars: HashMap<&str, usize> = HashMap::new();
        for d in &self.declarations {
            if let Item::Var { name, domain } = &d.item {
                if vars.insert(name, domain.len()).is_some() {
                    return Err(DslError::new(DslErrorKind::DuplicateName, d.span, name, "variable declared twice"));
                }
                if domain.is_empty() {
                    return Err(semantic(d, "empty domain"));
                }
                let mut seen = HashSet::new();
                if let Some(v) = domain.iter().find(|v| !seen.insert(v.as_str())) {
                    return Err(semantic(d, format!("value `{v}` listed twice")));
                }
            }
        }
        let size_of = |d: &Declaration, names: &[String]| -> Built<usize> {
            let mut seen = HashSet::new();
            let mut sizes = Vec::new();
            for n in names {
                if !seen.insert(n) {
                    return Err(semantic(d, format!("variable `{n}` appears twice")));
                }
                sizes.push(*vars.get(n.as_str()).ok_or_else(|| semantic(d, format!("undeclared variable `{n}`")))?);
            }
            product(sizes.into_iter()).ok_or_else(|| semantic(d, "state space too large"))
        };

        let mut tables = HashSet::new();
        let mut labels = HashSet::new();
        for d in &self.declarations {
            match &d.item {
                Item::Var { .. } => {}
                Item::Cpd { name, sources, targets, table } => {
                    let mut all = sources.clone();
                    all.extend(targets.iter().cloned());
                    size_of(d, &all)?;
                    let rows = size_of(d, sources)?;
                    let cols = size_of(d, targets)?;
                    if !sources.is_empty() && matches!(table, Table::Flat(_)) {
                        return Err(semantic(d, format!("cpd `{name}` is conditional; give {rows} bracketed rows")));
                    }
                    let given = table.rows();
                    if given.len() != rows {
                        return Err(semantic(d, format!("cpd `{name}` has {} rows, expected {rows}", given.len())));
                    }
                    for (r, row) in given.iter().enumerate() {
                        if row.len() != cols {
                            return Err(semantic(
                                d,
                                format!("cpd `{name}` row {r} has {} entries, expected arity {cols}", row.len()),
                            ));
                        }
                        if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                            return Err(semantic(d, format!("cpd `{name}` row {r} has a negative or infinite entry")));
                        }
                        let sum: f64 = row.iter().sum();
                        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                            return Err(semantic(d, format!("cpd `{name}` row {r} sums to {sum}")));
                        }
                    }
                    self.claim(&mut tables, d, name)?;
                }
                Item::Values { name, scope, values } => {
                    let n = size_of(d, scope)?;
                    if values.len() != n {
                        return Err(semantic(d, format!("`{name}` has {} entries, expected {n}", values.len())));
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(semantic(d, format!("`{name}` has an infinite entry")));
                    }
                    self.claim(&mut tables, d, name)?;
                }
                Item::Data { name, variables, records } => {
                    size_of(d, variables)?;
                    if records.is_empty() {
                        return Err(semantic(d, format!("dataset `{name}` has no records")));
                    }
                    for r in records {
                        if r.len() != variables.len() {
                            return Err(semantic(d, format!("record ({}) does not match ({})", r.join(", "), variables.join(", "))));
                        }
                        for (value, var) in r.iter().zip(variables) {
                            self.check_value(d, var, value)?;
                        }
                    }
                    self.claim(&mut tables, d, name)?;
                }
                Item::Factor { name, scope, values, theta } => {
                    let n = size_of(d, scope)?;
                    if values.len() != n {
                        return Err(semantic(d, format!("factor `{name}` has {} entries, expected {n}", values.len())));
                    }
                    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !values.iter().any(|v| *v > 0.0) {
                        return Err(semantic(d, format!("factor `{name}` needs nonnegative entries, one of them positive")));
                    }
                    if !theta.is_finite() {
                        return Err(semantic(d, format!("factor `{name}` needs a finite theta")));
                    }
                    self.claim(&mut tables, d, name)?;
                }
                Item::Edge { .. } | Item::Event { .. } | Item::Query { .. } => {}
            }
        }
        for d in &self.declarations {
            match &d.item {
                Item::Edge { name, beta, alpha } => {
                    if self.find(|i| matches!(i, Item::Cpd { name: n, .. } | Item::Data { name: n, .. } if n == name)).is_none() {
                        return Err(semantic(d, format!("no cpd or dataset named `{name}`")));
                    }
                    check_weights(d, *beta, *alpha)?;
                    if !labels.insert(name.clone()) {
                        return Err(DslError::new(DslErrorKind::DuplicateName, d.span, name, "edge declared twice"));
                    }
                }
                Item::Event { variable, value, beta, alpha } => {
                    if !vars.contains_key(variable.as_str()) {
                        return Err(semantic(d, format!("undeclared variable `{variable}`")));
                    }
                    self.check_value(d, variable, value)?;
                    check_weights(d, *beta, *alpha)?;
                    if !labels.insert(d.item.name()) {
                        return Err(DslError::new(DslErrorKind::DuplicateName, d.span, d.item.name(), "event declared twice"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn claim<'a>(&self, taken: &mut HashSet<&'a str>, d: &Declaration, name: &'a str) -> Built<()> {
        if taken.insert(name) {
            Ok(())
        } else {
            Err(DslError::new(DslErrorKind::DuplicateName, d.span, name, "name already used by another table"))
        }
    }

    fn check_value(&self, d: &Declaration, var: &str, value: &str) -> Built<()> {
        let ok = self.find(|i| matches!(i, Item::Var { name, .. } if name == var)).is_some_and(
            |v| matches!(&v.item, Item::Var { domain, .. } if domain.iter().any(|x| x == value)),
        );
        if ok {
            Ok(())
        } else {
            Err(semantic(d, format!("`{value}` is not a value of `{var}`")))
        }
    }

    /// Every declared variable, in declaration order.
    pub fn variables(&self) -> Vec<Variable> {
        self.items()
            .filter_map(|i| match i {
                Item::Var { name, domain } => Variable::new(name.clone(), domain.clone()).ok(),
                _ => None,
            })
            .collect()
    }

    pub fn variable(&self, name: &str) -> Option<Variable> {
        self.variables().into_iter().find(|v| v.name() == name)
    }

    fn lookup(&self, names: &[String]) -> Vec<Variable> {
        names.iter().filter_map(|n| self.variable(n)).collect()
    }

    fn core<T>(&self, d: &Declaration, r: crate::Result<T>) -> Built<T> {
        r.map_err(|e| semantic(d, e.to_string()))
    }

    /// The cpd declared as `name`, or the empirical distribution of the dataset `name`.
    pub fn cpd(&self, name: &str) -> Option<Built<Cpd>> {
        let d = self.find(|i| matches!(i, Item::Cpd { name: n, .. } | Item::Data { name: n, .. } if n == name))?;
        Some(match &d.item {
            Item::Cpd { sources, targets, table, .. } => {
                let flat = table.rows().concat();
                self.core(d, Cpd::new(self.lookup(sources), self.lookup(targets), flat))
            }
            _ => self.dataset(name)?.map(|data| data.cpd()),
        })
    }

    pub fn dataset(&self, name: &str) -> Option<Built<Dataset>> {
        let d = self.find(|i| matches!(i, Item::Data { name: n, .. } if n == name))?;
        let Item::Data { variables, records, .. } = &d.item else { return None };
        Some(self.core(d, Dataset::from_labels(self.lookup(variables), records)))
    }

    /// A real-valued table declared with `values`.
    pub fn values(&self, name: &str) -> Option<(Vec<Variable>, Vec<f64>)> {
        self.items().find_map(|i| match i {
            Item::Values { name: n, scope, values } if n == name => Some((self.lookup(scope), values.clone())),
            _ => None,
        })
    }

    /// `(beta, alpha)` of the edge or event with this label.
    pub fn weights(&self, label: &str) -> Option<(f64, f64)> {
        self.items().find_map(|i| match i {
            Item::Edge { name, beta, alpha } if name == label => Some((*beta, *alpha)),
            Item::Event { beta, alpha, .. } if i.name() == label => Some((*beta, *alpha)),
            _ => None,
        })
    }

    /// `(variable, value)` of every event, in order.
    pub fn events(&self) -> Vec<(String, String)> {
        self.items()
            .filter_map(|i| match i {
                Item::Event { variable, value, .. } => Some((variable.clone(), value.clone())),
                _ => None,
            })
            .collect()
    }

    pub fn queries(&self) -> Vec<(&str, &[(String, Param)])> {
        self.items()
            .filter_map(|i| match i {
                Item::Query { kind, params } => Some((kind.as_str(), params.as_slice())),
                _ => None,
            })
            .collect()
    }

    /// A numeric parameter of the first query of the given kind.
    pub fn query_number(&self, kind: &str, key: &str) -> Option<f64> {
        self.queries().into_iter().filter(|(k, _)| *k == kind).find_map(|(_, ps)| {
            ps.iter().find_map(|(k, p)| match p {
                Param::Number(v) if k == key => Some(*v),
                _ => None,
            })
        })
    }

    /// A word parameter of the first query of the given kind.
    pub fn query_word(&self, kind: &str, key: &str) -> Option<String> {
        self.queries().into_iter().filter(|(k, _)| *k == kind).find_map(|(_, ps)| {
            ps.iter().find_map(|(k, p)| match p {
                Param::Word(w) if k == key => Some(w.clone()),
                _ => None,
            })
        })
    }

    /// The PDG formed by all declared variables, `edge`s, and `event`s.
    pub fn to_pdg(&self) -> Built<Pdg> {
        let mut edges = Vec::new();
        for d in &self.declarations {
            match &d.item {
                Item::Edge { name, beta, alpha } => {
                    let cpd = self.cpd(name).ok_or_else(|| semantic(d, format!("no cpd or dataset named `{name}`")))??;
                    edges.push(Edge::new(name.clone(), cpd).with_beta(*beta).with_alpha(*alpha));
                }
                Item::Event { variable, value, beta, alpha } => {
                    let var = self.variable(variable).ok_or_else(|| semantic(d, format!("undeclared variable `{variable}`")))?;
                    let cpd = self.core(d, Cpd::point_mass(&var, value))?;
                    edges.push(Edge::new(d.item.name(), cpd).with_beta(*beta).with_alpha(*alpha));
                }
                _ => {}
            }
        }
        let first = self.declarations.first().map_or(Span { line: 1, column: 1 }, |d| d.span);
        Pdg::new(self.variables(), edges).map_err(|e| DslError::new(DslErrorKind::Semantic, first, "", e.to_string()))
    }

    pub fn has_factors(&self) -> bool {
        self.items().any(|i| matches!(i, Item::Factor { .. }))
    }

    /// The weighted factor graph formed by all declared variables and `factor`s.
    pub fn factor_graph(&self) -> Built<WeightedFactorGraph> {
        let mut factors = Vec::new();
        for d in &self.declarations {
            if let Item::Factor { name, scope, values, theta } = &d.item {
                factors.push(self.core(d, Factor::new(name.clone(), self.lookup(scope), values.clone(), *theta))?);
            }
        }
        let first = self.declarations.first().map_or(Span { line: 1, column: 1 }, |d| d.span);
        WeightedFactorGraph::new(self.variables(), factors)
            .map_err(|e| DslError::new(DslErrorKind::Semantic, first, "", e.to_string()))
    }
}

fn check_weights(d: &Declaration, beta: f64, alpha: f64) -> Built<()> {
    if beta.is_nan() || beta < 0.0 {
        return Err(semantic(d, format!("beta must be nonnegative, got {beta}")));
    }
    if !alpha.is_finite() {
        return Err(semantic(d, "alpha must be finite"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SURPRISAL: &str = "var X {x0, x1}\ncpd p : -> X = [0.25, 0.75]\nedge p beta=1\nevent X = x0 beta=inf\n";

    #[test]
    fn surprisal_spec() {
        let doc = parse(SURPRISAL).unwrap();
        let pdg = doc.to_pdg().unwrap();
        assert_eq!(pdg.variables().len(), 1);
        assert_eq!(pdg.edges().len(), 2);
        assert!(pdg.edges()[1].is_hard());
        assert_eq!(pdg.edges()[1].label, "X=x0");
    }

    #[test]
    fn wrong_arity_names_the_cpd() {
        let err = parse("var X {a, b}\nvar Y {c, d}\ncpd h : X -> Y = [[0.5, 0.5], [1, 0, 0]]\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::Semantic);
        assert!(err.message.contains("`h`") && err.message.contains("arity 2"), "{err}");
        assert_eq!(err.line, 3);
    }

    #[test]
    fn duplicates() {
        let err = parse("var X {a}\nvar X {b}\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::DuplicateName);
        let err = parse("var X {a, b}\ncpd p : -> X = [1, 0]\nedge p\nedge p\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::DuplicateName);
    }

    #[test]
    fn undeclared_names() {
        assert_eq!(parse("edge p\n").unwrap_err().kind, DslErrorKind::Semantic);
        assert_eq!(parse("cpd p : -> X = [1]\n").unwrap_err().kind, DslErrorKind::Semantic);
        assert_eq!(parse("var X {a}\nevent X = b\n").unwrap_err().kind, DslErrorKind::Semantic);
    }

    #[test]
    fn two_belief_confidences() {
        let text = "var X {x0, x1}\ncpd p : -> X = [0.5, 0.5]\ncpd q : -> X = [0.25, 0.75]\nedge p beta=2\nedge q beta=0.5\n";
        let pdg = parse(text).unwrap().to_pdg().unwrap();
        let betas: Vec<f64> = pdg.edges().iter().map(|e| e.beta.as_f64()).collect();
        assert_eq!(betas, vec![2.0, 0.5]);
        let again = parse(&serialize(&parse(text).unwrap())).unwrap().to_pdg().unwrap();
        assert!(pdg.equivalent(&again, 1e-12));
    }

    #[test]
    fn data_edges_and_queries() {
        let text = "var X {a, b}\ndata D over (X) { a, (b), a }\nedge D beta=inf\nquery inconsistency gamma=0.5 mode=fast\n";
        let doc = parse(text).unwrap();
        assert_eq!(doc.cpd("D").unwrap().unwrap().table(), &[2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(doc.query_number("inconsistency", "gamma"), Some(0.5));
        assert_eq!(doc.query_word("inconsistency", "mode").as_deref(), Some("fast"));
        assert!(doc.to_pdg().unwrap().edges()[0].is_hard());
    }

    #[test]
    fn factors() {
        let doc = parse("var X {a, b}\nfactor J over (X) = [1, 3] theta=2\n").unwrap();
        let fg = doc.factor_graph().unwrap();
        assert_eq!(fg.factors()[0].theta, 2.0);
        assert!(parse("var X {a, b}\nfactor J over (X) = [0, 0]\n").is_err());
    }

    #[test]
    fn hyphenated_words_and_tight_arrows() {
        let doc = parse("var X {a, b}\nvar Y {c}\ncpd h : X->Y = [[1], [1]]\nquery loss name=cross-entropy\n").unwrap();
        assert_eq!(doc.query_word("loss", "name").as_deref(), Some("cross-entropy"));
        assert_eq!(doc.cpd("h").unwrap().unwrap().sources()[0].name(), "X");
    }
}
