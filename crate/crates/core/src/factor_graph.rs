//! Weighted factor graphs `Ψ = (φ_J, θ_J)`, their partition functions, and
//! the PDG whose `γ = 1` inconsistency is the free energy `−log Z_Ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::SolverSummary;
use crate::model::{Cpd, Edge, JointTable, Layout, Pdg, Variable, DEFAULT_MAX_CELLS};
use crate::parallel;
use crate::score::Score;
use crate::scoring::variational_free_energy;
use crate::solver::{min_gamma_score, SolveOptions};

/// Tolerance on `|⟨PDG(Ψ)⟩_1 − (−log Z_Ψ + offset)|`.
pub const FREE_ENERGY_TOLERANCE: f64 = 1e-5;
/// Tolerance on the total variation between the solver's argmin and `Pr_Ψ`.
pub const GIBBS_TV_TOLERANCE: f64 = 1e-4;

const BLOCK: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factor {
    pub name: String,
    pub scope: Vec<Variable>,
    /// Nonnegative entries over the scope, row-major.
    pub values: Vec<f64>,
    pub theta: f64,
}

impl Factor {
    pub fn new(name: impl Into<String>, scope: Vec<Variable>, values: Vec<f64>, theta: f64) -> Result<Factor> {
        let name = name.into();
        let cells: usize = scope.iter().map(Variable::size).product();
        if values.len() != cells {
            return Err(Error::ShapeMismatch(format!(
                "factor `{name}` has {} entries, its scope has {cells} cells",
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("factor `{name}` has a negative or non-finite entry")));
        }
        if !values.iter().any(|v| *v > 0.0) {
            return Err(Error::ZeroFactor(name));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!("factor `{name}` has non-finite weight {theta}")));
        }
        if theta < 0.0 && values.contains(&0.0) {
            return Err(Error::InvalidArgument(format!("factor `{name}` raises a zero entry to a negative power")));
        }
        Ok(Factor { name, scope, values, theta })
    }

    /// `Σ_x φ(x)`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `φ / Σφ` as an unconditional cpd over the scope.
    pub fn normalized(&self) -> Result<Cpd> {
        let c = self.mass();
        Cpd::new(Vec::new(), self.scope.clone(), self.values.iter().map(|v| v / c).collect())
    }

    fn log_weight(&self, entry: f64) -> f64 {
        if self.theta == 0.0 {
            0.0
        } else if entry == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.theta * entry.ln()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionFunction {
    pub z: f64,
    pub log_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedFactorGraph {
    variables: Vec<Variable>,
    factors: Vec<Factor>,
}

impl WeightedFactorGraph {
    pub fn new(variables: Vec<Variable>, factors: Vec<Factor>) -> Result<WeightedFactorGraph> {
        let mut names = std::collections::HashSet::new();
        for v in &variables {
            if !names.insert(v.name()) {
                return Err(Error::DuplicateVariable(v.name().to_string()));
            }
        }
        let mut labels = std::collections::HashSet::new();
        for f in &factors {
            if !labels.insert(f.name.as_str()) {
                return Err(Error::DuplicateLabel(f.name.clone()));
            }
            for v in &f.scope {
                match variables.iter().find(|w| w.name() == v.name()) {
                    Some(w) if w == v => {}
                    Some(_) => return Err(Error::ShapeMismatch(format!("factor `{}` disagrees on `{}`'s domain", f.name, v.name()))),
                    None => return Err(Error::UnknownVariable(v.name().to_string())),
                }
            }
        }
        Ok(WeightedFactorGraph { variables, factors })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    fn layout(&self, cap: usize) -> Result<Layout> {
        let cells: u128 = self.variables.iter().map(|v| v.size() as u128).product();
        if cells > cap as u128 {
            return Err(Error::StateSpaceTooLarge { cells, cap });
        }
        Ok(Layout::new(self.variables.iter().map(Variable::size).collect()))
    }

    fn projections(&self, layout: &Layout) -> Vec<Vec<usize>> {
        self.factors
            .iter()
            .map(|f| {
                let pos: Vec<usize> =
                    f.scope.iter().map(|v| self.variables.iter().position(|w| w == v).expect("checked in new")).collect();
                layout.projection(&pos)
            })
            .collect()
    }

    /// `Σ_J θ_J log φ_J(x_J)` for every joint cell.
    pub fn log_weights(&self, parallel: bool) -> Result<Vec<f64>> {
        let layout = self.layout(DEFAULT_MAX_CELLS)?;
        let proj = self.projections(&layout);
        let n = layout.len();
        let blocks = parallel::map_range(n.div_ceil(BLOCK), parallel, |b| {
            (b * BLOCK..((b + 1) * BLOCK).min(n))
                .map(|cell| self.factors.iter().zip(&proj).map(|(f, p)| f.log_weight(f.values[p[cell]])).sum::<f64>())
                .collect::<Vec<f64>>()
        });
        Ok(blocks.concat())
    }

    /// `Z_Ψ = Σ_x Π_J φ_J(x_J)^{θ_J}`, summed in the log domain.
    pub fn partition_function(&self, parallel: bool) -> Result<PartitionFunction> {
        let w = self.log_weights(parallel)?;
        let partial = parallel::map_range(w.len().div_ceil(BLOCK), parallel, |b| {
            log_sum_exp(&w[b * BLOCK..((b + 1) * BLOCK).min(w.len())])
        });
        let log_z = log_sum_exp(&partial);
        Ok(PartitionFunction { z: log_z.exp(), log_z })
    }

    /// `Pr_Ψ(x) = Π_J φ_J(x_J)^{θ_J} / Z_Ψ`.
    pub fn gibbs_distribution(&self, parallel: bool) -> Result<JointTable> {
        let w = self.log_weights(parallel)?;
        let log_z = log_sum_exp(&w);
        JointTable::new(self.variables.clone(), w.iter().map(|l| (l - log_z).exp()).collect())
    }

    /// `(θ_J, log 1/p_J(x_J))` per factor and cell, with `p_J` the normalized factor.
    pub fn weighted_energies(&self) -> Result<Vec<(f64, Vec<f64>)>> {
        let layout = self.layout(DEFAULT_MAX_CELLS)?;
        Ok(self
            .factors
            .iter()
            .zip(self.projections(&layout))
            .map(|(f, p)| {
                let c = f.mass();
                (f.theta, p.iter().map(|&i| -(f.values[i] / c).ln()).collect())
            })
            .collect())
    }

    /// One source-less edge per factor, carrying the normalized factor with
    /// `α = β = θ_J`.
    pub fn to_pdg(&self) -> Result<Pdg> {
        let edges = self
            .factors
            .iter()
            .map(|f| {
                if f.theta < 0.0 {
                    return Err(Error::InvalidArgument(format!("factor `{}` has negative weight {}", f.name, f.theta)));
                }
                Ok(Edge::new(f.name.clone(), f.normalized()?).with_beta(f.theta).with_alpha(f.theta))
            })
            .collect::<Result<_>>()?;
        Pdg::new(self.variables.clone(), edges)
    }

    /// `Σ_J θ_J log Σ φ_J`, the shift in free energy caused by normalizing the factors.
    pub fn normalization_offset(&self) -> f64 {
        self.factors.iter().map(|f| f.theta * f.mass().ln()).sum()
    }

    /// Solves `PDG(Ψ)` at `γ = 1` and compares with `−log Z_Ψ` and `Pr_Ψ`.
    pub fn free_energy_identity(&self, opts: &SolveOptions) -> Result<FreeEnergyReport> {
        let pdg = self.to_pdg()?;
        let pf = self.partition_function(opts.parallel)?;
        let gibbs = self.gibbs_distribution(opts.parallel)?;
        let result = min_gamma_score(&pdg, 1.0, opts)?;
        let offset = self.normalization_offset();
        let free_energy = Score::nats(-pf.log_z);
        let predicted = Score::nats(offset - pf.log_z);
        let residual = result.inconsistency.distance(predicted);
        let argmin_tv = result.argmin.total_variation(&gibbs)?;
        let at_gibbs = variational_free_energy(&gibbs, &self.weighted_energies()?);
        Ok(FreeEnergyReport {
            log_z: pf.log_z,
            free_energy,
            offset,
            inconsistency: result.inconsistency,
            residual,
            argmin_tv,
            vfe_at_gibbs: at_gibbs,
            solver: SolverSummary::from(&result),
        })
    }

    pub fn from_json(text: &str) -> Result<WeightedFactorGraph> {
        let file: FactorGraphFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("factor graph JSON: {e}")))?;
        file.into_graph()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&FactorGraphFile::from(self)).expect("plain data serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeEnergyReport {
    pub log_z: f64,
    /// `−log Z_Ψ`.
    pub free_energy: Score,
    /// `Σ_J θ_J log Σ φ_J`; zero when every factor is already normalized.
    pub offset: f64,
    /// `⟨PDG(Ψ)⟩_1`.
    pub inconsistency: Score,
    /// `|⟨PDG(Ψ)⟩_1 − (−log Z_Ψ + offset)|`.
    pub residual: f64,
    pub argmin_tv: f64,
    /// Variational free energy of the normalized factors at `Pr_Ψ`.
    pub vfe_at_gibbs: Score,
    pub solver: SolverSummary,
}

impl FreeEnergyReport {
    pub fn holds(&self) -> bool {
        self.residual <= FREE_ENERGY_TOLERANCE && self.argmin_tv <= GIBBS_TV_TOLERANCE
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Serialize, Deserialize)]
struct VariableEntry {
    name: String,
    domain: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FactorEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    scope: Vec<String>,
    values: Vec<f64>,
    #[serde(default = "one")]
    theta: f64,
}

fn one() -> f64 {
    1.0
}

/// On-disk form: `{variables: [{name, domain}], factors: [{scope, values, theta}]}`.
#[derive(Debug, Serialize, Deserialize)]
struct FactorGraphFile {
    variables: Vec<VariableEntry>,
    factors: Vec<FactorEntry>,
}

impl FactorGraphFile {
    fn into_graph(self) -> Result<WeightedFactorGraph> {
        let variables: Vec<Variable> =
            self.variables.into_iter().map(|v| Variable::new(v.name, v.domain)).collect::<Result<_>>()?;
        let factors = self
            .factors
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let scope = f
                    .scope
                    .iter()
                    .map(|n| {
                        variables.iter().find(|v| v.name() == n).cloned().ok_or_else(|| Error::UnknownVariable(n.clone()))
                    })
                    .collect::<Result<_>>()?;
                Factor::new(f.name.unwrap_or_else(|| format!("f{i}")), scope, f.values, f.theta)
            })
            .collect::<Result<_>>()?;
        WeightedFactorGraph::new(variables, factors)
    }
}

impl From<&WeightedFactorGraph> for FactorGraphFile {
    fn from(g: &WeightedFactorGraph) -> Self {
        FactorGraphFile {
            variables: g
                .variables
                .iter()
                .map(|v| VariableEntry { name: v.name().to_string(), domain: v.domain().to_vec() })
                .collect(),
            factors: g
                .factors
                .iter()
                .map(|f| FactorEntry {
                    name: Some(f.name.clone()),
                    scope: f.scope.iter().map(|v| v.name().to_string()).collect(),
                    values: f.values.clone(),
                    theta: f.theta,
                })
                .collect(),
        }
    }
}
