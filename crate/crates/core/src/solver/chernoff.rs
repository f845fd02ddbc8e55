//! Chernoff information `sup_{β∈(0,1)} −log Σ_x p(x)^β q(x)^{1−β}`, which
//! is the best (β, 1−β) PDG divergence between two beliefs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Cpd;
use crate::score::Score;

const LOWER: f64 = 1e-6;
const UPPER: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffResult {
    pub value: Score,
    pub beta_star: f64,
    /// `p = q`: every β is optimal and the value is 0.
    pub degenerate: bool,
}

fn objective(p: &[f64], q: &[f64], beta: f64) -> f64 {
    let s: f64 = p.iter().zip(q).filter(|(&a, &b)| a > 0.0 && b > 0.0).map(|(a, b)| a.powf(beta) * b.powf(1.0 - beta)).sum();
    -s.ln()
}

pub fn chernoff_divergence(p: &Cpd, q: &Cpd, tol: f64) -> Result<ChernoffResult> {
    if !p.is_unconditional() || !q.is_unconditional() {
        return Err(Error::InvalidArgument("chernoff divergence needs unconditional cpds".into()));
    }
    if p.targets() != q.targets() {
        return Err(Error::ShapeMismatch("chernoff divergence needs cpds over the same variables".into()));
    }
    let (p, q) = (p.table(), q.table());
    if p == q {
        return Ok(ChernoffResult { value: Score::ZERO, beta_star: 0.5, degenerate: true });
    }
    if !p.iter().zip(q).any(|(&a, &b)| a > 0.0 && b > 0.0) {
        return Ok(ChernoffResult { value: Score::INFINITE, beta_star: 0.5, degenerate: false });
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (LOWER, UPPER);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(p, q, c), objective(p, q, d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(p, q, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(p, q, d);
        }
    }
    let beta_star = (a + b) / 2.0;
    Ok(ChernoffResult { value: Score::nats(objective(p, q, beta_star).max(0.0)), beta_star, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;

    fn cpd(p: Vec<f64>) -> Cpd {
        Cpd::unconditional(Variable::binary("X"), p).unwrap()
    }

    #[test]
    fn equal_beliefs_are_degenerate() {
        let r = chernoff_divergence(&cpd(vec![0.3, 0.7]), &cpd(vec![0.3, 0.7]), 1e-8).unwrap();
        assert_eq!(r.value, Score::ZERO);
        assert_eq!(r.beta_star, 0.5);
        assert!(r.degenerate);
    }

    #[test]
    fn disjoint_supports() {
        let r = chernoff_divergence(&cpd(vec![1.0, 0.0]), &cpd(vec![0.0, 1.0]), 1e-8).unwrap();
        assert!(r.value.is_infinite());
    }

    #[test]
    fn matches_a_fine_scan() {
        let (p, q) = (vec![0.5, 0.5], vec![0.25, 0.75]);
        let r = chernoff_divergence(&cpd(p.clone()), &cpd(q.clone()), 1e-8).unwrap();
        let (best_b, best) = (1..100_000)
            .map(|i| i as f64 / 100_000.0)
            .map(|b| (b, objective(&p, &q, b)))
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((r.value.value() - best).abs() < 1e-9);
        assert!((r.beta_star - best_b).abs() < 1e-4);
    }
}
