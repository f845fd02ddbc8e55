//! Minimizing the γ-score: `⟨M⟩_γ = inf_μ [M]_γ(μ)`.

mod chernoff;
mod family;
mod limit;
mod problem;

use serde::Serialize;

pub use chernoff::{chernoff_divergence, ChernoffResult};
pub use family::{feasible_family, FamilyKind, FeasibleFamily};
pub use limit::{limit_gamma_inf, limit_joint};

use crate::error::{Error, Result};
use crate::model::{JointTable, Pdg, DEFAULT_MAX_CELLS};
use crate::parallel;
use crate::score::Score;
use problem::{Problem, RunOptions};

/// Restarts used when the caller does not choose.
pub fn default_restarts(gamma: f64) -> usize {
    if gamma > 0.0 {
        8
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Stop once successive objective values differ by less than this
    /// (relative to the objective when it exceeds 1).
    pub tol: f64,
    /// ...and the simplex-gradient stationarity residual is below this,
    /// scaled by the total weight `Σ(β + γα) + γ` when that exceeds 1.
    pub stationarity_tol: f64,
    pub max_iter: usize,
    /// `None` picks [`default_restarts`].
    pub restarts: Option<usize>,
    pub seed: u64,
    /// Run restarts on the rayon pool (when built with `parallel`).
    pub parallel: bool,
    pub max_cells: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            stationarity_tol: 1e-7,
            max_iter: 100_000,
            restarts: None,
            seed: 0,
            parallel: true,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

impl SolveOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = Some(restarts);
        self
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub inconsistency: Score,
    pub argmin: JointTable,
    /// Iterations taken by the winning restart.
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub family: FamilyKind,
}

pub fn min_gamma_score(pdg: &Pdg, gamma: f64, options: &SolveOptions) -> Result<SolveResult> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be finite and nonnegative, got {gamma}")));
    }
    let restarts = options.restarts.unwrap_or_else(|| default_restarts(gamma)).max(1);
    let Some(problem) = Problem::compile(pdg, gamma, options.max_cells)? else {
        let family = feasible_family(pdg)?.kind;
        return Ok(SolveResult {
            inconsistency: Score::INFINITE,
            argmin: JointTable::uniform(pdg.variables().to_vec()),
            iterations: 0,
            converged: true,
            restarts_used: 0,
            family,
        });
    };
    let run_opts =
        RunOptions { tol: options.tol, stationarity_tol: options.stationarity_tol, max_iter: options.max_iter };
    let runs = parallel::map_range(restarts, options.parallel, |r| problem.run(problem.start(options.seed, r), &run_opts));
    let (_, best) = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .expect("at least one restart");

    let mut probs = vec![0.0; problem.full_cells];
    for (&cell, &l) in problem.cells.iter().zip(&best.log_mu) {
        probs[cell] = l.exp();
    }
    let argmin = JointTable::from_weights(pdg.variables().to_vec(), probs)?;
    // a sum of relative entropies; only roundoff can push it below zero
    let value = if gamma == 0.0 { best.value.max(0.0) } else { best.value };
    Ok(SolveResult {
        inconsistency: Score::nats(value),
        argmin,
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: restarts,
        family: problem.kind,
    })
}

/// `⟨M⟩ = ⟨M⟩_0` with default options.
pub fn inconsistency(pdg: &Pdg) -> Result<Score> {
    Ok(min_gamma_score(pdg, 0.0, &SolveOptions::default())?.inconsistency)
}
