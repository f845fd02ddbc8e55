//! The compiled objective over the support of the feasible family, and the
//! projected mirror-descent loop that minimizes it.
//!
//! Iterates are kept as `log μ` over the allowed cells. A step is
//! `log μ⁺ = Π(log μ − η ∇F)` where `Π` is the KL projection onto the
//! feasible family; `η` is adapted by Armijo backtracking against the
//! Bregman upper model `F(μ) + ⟨∇F, μ⁺ − μ⟩ + KL(μ⁺‖μ)/η`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::family::{feasible_family, FamilyKind};
use crate::error::Result;
use crate::model::Pdg;

const PROJECTION_TOLERANCE: f64 = 1e-13;
const MAX_PROJECTION_CYCLES: usize = 10_000;
const FEASIBILITY_TOLERANCE: f64 = 1e-8;
const MAX_BACKTRACKS: usize = 60;
const MAX_STEP: f64 = 1e12;

struct CompiledEdge {
    hard: bool,
    /// Weight of the divergence term (zero for hard edges).
    beta: f64,
    alpha: f64,
    /// Per allowed cell: index of the source assignment.
    s: Vec<u32>,
    /// Per allowed cell: index of the (source, target) assignment.
    st: Vec<u32>,
    n_s: usize,
    cols: usize,
    /// Per allowed cell: `ln p(t | s)`, zero where unused.
    log_p: Vec<f64>,
    table: Vec<f64>,
}

enum Constraint {
    Free,
    Pinned { block: Vec<u32>, log_mass: Vec<f64> },
    Coupled { hard: Vec<usize> },
}

pub(crate) struct Problem {
    pub(crate) full_cells: usize,
    /// Full-joint indices of the allowed cells.
    pub(crate) cells: Vec<usize>,
    pub(crate) kind: FamilyKind,
    edges: Vec<CompiledEdge>,
    gamma: f64,
    constraint: Constraint,
    scale: f64,
}

pub(crate) struct RunOptions {
    pub tol: f64,
    pub stationarity_tol: f64,
    pub max_iter: usize,
}

pub(crate) struct Run {
    pub value: f64,
    pub log_mu: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Problem {
    /// `None` when no distribution has a finite score.
    pub(crate) fn compile(pdg: &Pdg, gamma: f64, max_cells: usize) -> Result<Option<Problem>> {
        let full_cells = pdg.check_cells(max_cells)?;
        let family = feasible_family(pdg)?;
        let layout = pdg.layout();

        struct Raw {
            hard: bool,
            beta: f64,
            alpha: f64,
            s: Vec<usize>,
            st: Vec<usize>,
            n_s: usize,
            cols: usize,
            table: Vec<f64>,
        }
        let mut raw = Vec::new();
        for edge in pdg.canonical_edges() {
            let (s_pos, t_pos) = pdg.edge_positions(edge)?;
            let cols = edge.cpd.cols();
            let s = layout.projection(&s_pos);
            let t = layout.projection(&t_pos);
            let st = s.iter().zip(&t).map(|(a, b)| a * cols + b).collect();
            raw.push(Raw {
                hard: edge.is_hard(),
                beta: edge.beta.finite().unwrap_or(0.0),
                alpha: edge.alpha,
                s,
                st,
                n_s: edge.cpd.rows(),
                cols,
                table: edge.cpd.table().to_vec(),
            });
        }

        let masking: Vec<&Raw> = raw.iter().filter(|r| r.hard || r.beta > 0.0).collect();
        let cells: Vec<usize> =
            (0..full_cells).filter(|&c| masking.iter().all(|r| r.table[r.st[c]] > 0.0)).collect();
        if cells.is_empty() {
            return Ok(None);
        }

        let constraint = match family.kind {
            FamilyKind::Free => Constraint::Free,
            FamilyKind::Pinned => {
                let pinned: Vec<usize> =
                    family.pinned_variables.iter().map(|n| pdg.position(n)).collect::<Result<_>>()?;
                let proj = layout.projection(&pinned);
                let mass = family.pinned_mass.as_ref().expect("pinned family carries its marginal");
                let mut covered = vec![false; mass.len()];
                let block: Vec<u32> = cells
                    .iter()
                    .map(|&c| {
                        covered[proj[c]] = true;
                        proj[c] as u32
                    })
                    .collect();
                if mass.iter().zip(&covered).any(|(&m, &hit)| m > 0.0 && !hit) {
                    return Ok(None);
                }
                let log_mass = mass.iter().map(|m| m.ln()).collect();
                Constraint::Pinned { block, log_mass }
            }
            FamilyKind::Coupled => {
                Constraint::Coupled { hard: raw.iter().enumerate().filter(|(_, r)| r.hard).map(|(i, _)| i).collect() }
            }
        };

        let edges: Vec<CompiledEdge> = raw
            .into_iter()
            .map(|r| {
                let log_p = cells
                    .iter()
                    .map(|&c| {
                        let p = r.table[r.st[c]];
                        if p > 0.0 {
                            p.ln()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                CompiledEdge {
                    hard: r.hard,
                    beta: r.beta,
                    alpha: r.alpha,
                    s: cells.iter().map(|&c| r.s[c] as u32).collect(),
                    st: cells.iter().map(|&c| r.st[c] as u32).collect(),
                    n_s: r.n_s,
                    cols: r.cols,
                    log_p,
                    table: r.table,
                }
            })
            .filter(|e| e.hard || e.beta > 0.0 || (gamma > 0.0 && e.alpha > 0.0))
            .collect();

        let scale = edges.iter().map(|e| e.beta + gamma * e.alpha).sum::<f64>() + gamma;
        Ok(Some(Problem { full_cells, cells, kind: family.kind, edges, gamma, constraint, scale: scale.max(1e-12) }))
    }

    /// Objective value, and optionally its gradient with respect to `μ`.
    pub(crate) fn eval(&self, lm: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut f = 0.0;
        if self.gamma > 0.0 {
            for (i, &l) in lm.iter().enumerate() {
                if l == f64::NEG_INFINITY {
                    continue;
                }
                f += self.gamma * l.exp() * l;
                if let Some(g) = grad.as_deref_mut() {
                    g[i] += self.gamma * l;
                }
            }
        }
        for e in &self.edges {
            let inc = if e.hard { 0.0 } else { e.beta };
            let ent = self.gamma * e.alpha;
            if inc == 0.0 && ent == 0.0 {
                continue;
            }
            let ls = group_lse(lm, &e.s, e.n_s);
            let lst = group_lse(lm, &e.st, e.n_s * e.cols);
            for (i, &l) in lm.iter().enumerate() {
                if l == f64::NEG_INFINITY {
                    continue;
                }
                let lcond = lst[e.st[i] as usize] - ls[e.s[i] as usize];
                let mut term = -ent * lcond;
                if inc > 0.0 {
                    term += inc * (lcond - e.log_p[i]);
                }
                f += l.exp() * term;
                if let Some(g) = grad.as_deref_mut() {
                    g[i] += term;
                }
            }
        }
        f
    }

    /// KL projection onto the feasible family, in place. Returns `false` if
    /// the family has no mass on the allowed cells.
    pub(crate) fn project(&self, lm: &mut [f64]) -> bool {
        match &self.constraint {
            Constraint::Free => normalize(lm),
            Constraint::Pinned { block, log_mass } => {
                let z = group_lse(lm, block, log_mass.len());
                for (l, &b) in lm.iter_mut().zip(block) {
                    *l += log_mass[b as usize] - z[b as usize];
                }
                lm.iter().all(|l| !l.is_nan()) && lm.iter().any(|l| l.is_finite())
            }
            Constraint::Coupled { hard } => {
                if !normalize(lm) {
                    return false;
                }
                for _ in 0..MAX_PROJECTION_CYCLES {
                    for &h in hard {
                        if !self.i_project(&self.edges[h], lm) {
                            return false;
                        }
                    }
                    if self.violation(lm) < PROJECTION_TOLERANCE {
                        return true;
                    }
                }
                self.violation(lm) < FEASIBILITY_TOLERANCE
            }
        }
    }

    /// I-projection onto `{μ : μ(T | S) = p(T | S)}`.
    fn i_project(&self, e: &CompiledEdge, lm: &mut [f64]) -> bool {
        let lst = group_lse(lm, &e.st, e.n_s * e.cols);
        let mut lmarg = vec![0.0; e.n_s];
        for (s, m) in lmarg.iter_mut().enumerate() {
            for t in 0..e.cols {
                let p = e.table[s * e.cols + t];
                if p > 0.0 {
                    *m += p * (lst[s * e.cols + t] - p.ln());
                }
            }
            if m.is_nan() {
                *m = f64::NEG_INFINITY;
            }
        }
        let z = lse(&lmarg);
        if z == f64::NEG_INFINITY {
            return false;
        }
        for (i, l) in lm.iter_mut().enumerate() {
            if *l == f64::NEG_INFINITY {
                continue;
            }
            let m = lmarg[e.s[i] as usize];
            *l = if m == f64::NEG_INFINITY { f64::NEG_INFINITY } else { *l + m - z + e.log_p[i] - lst[e.st[i] as usize] };
        }
        true
    }

    /// `Σ_L ‖μ(S,T) − μ(S) p(T|S)‖₁` over hard edges.
    pub(crate) fn violation(&self, lm: &[f64]) -> f64 {
        let mut total = 0.0;
        for e in self.edges.iter().filter(|e| e.hard) {
            let mut joint = vec![0.0; e.n_s * e.cols];
            for (i, &l) in lm.iter().enumerate() {
                joint[e.st[i] as usize] += l.exp();
            }
            for (s, row) in joint.chunks(e.cols).enumerate() {
                let ms: f64 = row.iter().sum();
                for (t, &m) in row.iter().enumerate() {
                    total += (m - ms * e.table[s * e.cols + t]).abs();
                }
            }
        }
        total
    }

    /// Starting point for restart `index`: uniform for 0, Dirichlet(1) otherwise.
    pub(crate) fn start(&self, seed: u64, index: usize) -> Vec<f64> {
        if index == 0 {
            return vec![0.0; self.cells.len()];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        (0..self.cells.len())
            .map(|_| {
                let e: f64 = Exp1.sample(&mut rng);
                e.max(f64::MIN_POSITIVE).ln()
            })
            .collect()
    }

    fn residual(&self, lm: &[f64], g: &[f64]) -> f64 {
        let blocks: Vec<u32>;
        let (block, n): (&[u32], usize) = match &self.constraint {
            Constraint::Free => {
                blocks = vec![0; lm.len()];
                (&blocks, 1)
            }
            Constraint::Pinned { block, log_mass } => (block, log_mass.len()),
            Constraint::Coupled { .. } => unreachable!("coupled residual is step-based"),
        };
        let mut mass = vec![0.0; n];
        let mut mean = vec![0.0; n];
        for i in 0..lm.len() {
            let m = lm[i].exp();
            mass[block[i] as usize] += m;
            mean[block[i] as usize] += m * g[i];
        }
        for (a, m) in mean.iter_mut().zip(&mass) {
            if *m > 0.0 {
                *a /= m;
            }
        }
        (0..lm.len()).map(|i| lm[i].exp() * (g[i] - mean[block[i] as usize]).abs()).sum()
    }

    pub(crate) fn run(&self, mut lm: Vec<f64>, opts: &RunOptions) -> Run {
        if !self.project(&mut lm) {
            return Run { value: f64::INFINITY, log_mu: lm, iterations: 0, converged: true };
        }
        let n = lm.len();
        let mut g = vec![0.0; n];
        let mut f = self.eval(&lm, Some(&mut g));
        let mut eta = 1.0 / self.scale;
        let mut cand = vec![0.0; n];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iter {
            iterations += 1;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                for i in 0..n {
                    cand[i] = lm[i] - eta * g[i];
                }
                if self.project(&mut cand) {
                    let fc = self.eval(&cand, None);
                    let (mut lin, mut kl) = (0.0, 0.0);
                    for i in 0..n {
                        if cand[i] == f64::NEG_INFINITY {
                            if lm[i] != f64::NEG_INFINITY {
                                lin -= g[i] * lm[i].exp();
                            }
                            continue;
                        }
                        let (pc, p) = (cand[i].exp(), lm[i].exp());
                        lin += g[i] * (pc - p);
                        kl += pc * (cand[i] - lm[i]);
                    }
                    if fc <= f + lin + kl.max(0.0) / eta + 1e-15 * (1.0 + f.abs()) {
                        accepted = Some(fc);
                        break;
                    }
                }
                eta /= 2.0;
            }
            let Some(fc) = accepted else {
                converged = self.stationary(&lm, &g, None, opts);
                break;
            };
            let step = if matches!(self.constraint, Constraint::Coupled { .. }) {
                Some(lm.iter().zip(&cand).map(|(a, b)| (a.exp() - b.exp()).abs()).sum::<f64>() / eta)
            } else {
                None
            };
            let df = (f - fc).abs();
            std::mem::swap(&mut lm, &mut cand);
            f = self.eval(&lm, Some(&mut g));
            if df < opts.tol * f.abs().max(1.0) && self.stationary(&lm, &g, step, opts) {
                converged = true;
                break;
            }
            eta = (eta * 2.0).min(MAX_STEP);
        }
        Run { value: f, log_mu: lm, iterations, converged }
    }

    fn stationary(&self, lm: &[f64], g: &[f64], step: Option<f64>, opts: &RunOptions) -> bool {
        match step {
            Some(r) => r < opts.stationarity_tol * self.scale.max(1.0),
            None if matches!(self.constraint, Constraint::Coupled { .. }) => true,
            None => self.residual(lm, g) < opts.stationarity_tol * self.scale.max(1.0),
        }
    }
}

fn normalize(lm: &mut [f64]) -> bool {
    let z = lse(lm);
    if !z.is_finite() {
        return false;
    }
    lm.iter_mut().for_each(|l| *l -= z);
    true
}

pub(crate) fn lse(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Log-sum-exp of `values` within each of `n` groups.
fn group_lse(values: &[f64], groups: &[u32], n: usize) -> Vec<f64> {
    let mut max = vec![f64::NEG_INFINITY; n];
    for (&v, &g) in values.iter().zip(groups) {
        let m = &mut max[g as usize];
        if v > *m {
            *m = v;
        }
    }
    let mut sum = vec![0.0; n];
    for (&v, &g) in values.iter().zip(groups) {
        let m = max[g as usize];
        if m > f64::NEG_INFINITY {
            sum[g as usize] += (v - m).exp();
        }
    }
    max.iter().zip(&sum).map(|(&m, &s)| if m == f64::NEG_INFINITY { m } else { m + s.ln() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouped_log_sum_exp() {
        let v = [0.0, 0.0, 1.0f64.ln(), f64::NEG_INFINITY];
        let out = group_lse(&v, &[0, 0, 1, 2], 3);
        assert!((out[0] - 2.0f64.ln()).abs() < 1e-15);
        assert!(out[1].abs() < 1e-15);
        assert_eq!(out[2], f64::NEG_INFINITY);
    }
}
