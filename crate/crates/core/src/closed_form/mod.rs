//! Analytic values for small PDGs: two-belief divergences, Rényi divergences,
//! power means, and the two-Gaussian inconsistency.

mod gaussian;

pub use gaussian::{
    complete_square, discretized_two_gaussian, two_gaussian_inconsistency, CompletedSquare, GaussianSpec, MseConstant,
};

use crate::error::{Error, Result};
use crate::score::Score;

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    for d in [p, q] {
        let total: f64 = d.iter().sum();
        if d.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotASimplex(format!("{d:?}")));
        }
    }
    Ok(())
}

/// `ln x` scaled by a weight, with `0 · ln 0 = 0`.
fn weighted_ln(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * x.ln()
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Inconsistency of `{p with confidence r, q with confidence s}` over one
/// variable: `−(r+s) · log Σ_x (p(x)^r q(x)^s)^{1/(r+s)}`.
pub fn pdg_divergence(p: &[f64], q: &[f64], r: f64, s: f64) -> Result<Score> {
    check_pair(p, q)?;
    if !(r >= 0.0 && s >= 0.0 && r + s > 0.0 && (r + s).is_finite()) {
        return Err(Error::InvalidArgument(format!("confidences ({r}, {s}) must be nonnegative with a positive sum")));
    }
    let t = r + s;
    let z = log_sum_exp(p.iter().zip(q).map(|(&a, &b)| (weighted_ln(r, a) + weighted_ln(s, b)) / t));
    Ok(Score::nats((-t * z).max(0.0)))
}

/// `D(p ‖ q)`.
pub fn kl(p: &[f64], q: &[f64]) -> Result<Score> {
    check_pair(p, q)?;
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(Score::INFINITE);
            }
            total += a * (a / b).ln();
        }
    }
    Ok(Score::nats(total.max(0.0)))
}

/// Rényi divergence `D_α(p ‖ q) = 1/(α−1) · log Σ p^α q^{1−α}`; `α = 1` is KL.
pub fn renyi_divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<Score> {
    check_pair(p, q)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("Rényi order must be positive, got {alpha}")));
    }
    if alpha == 1.0 {
        return kl(p, q);
    }
    let terms = p.iter().zip(q).map(|(&a, &b)| {
        if a == 0.0 {
            f64::NEG_INFINITY
        } else if b == 0.0 {
            if alpha < 1.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            alpha * a.ln() + (1.0 - alpha) * b.ln()
        }
    });
    let z = log_sum_exp(terms);
    if !z.is_finite() {
        return Ok(Score::INFINITE);
    }
    Ok(Score::nats((z / (alpha - 1.0)).max(0.0)))
}

/// `(r, s) ↦ (α, scale)` with `pdg_divergence(p, q, r, s) = scale · D_α(p‖q)`.
pub fn confidences_to_alpha(r: f64, s: f64) -> Result<(f64, f64)> {
    if !(r >= 0.0 && s >= 0.0 && r + s > 0.0) {
        return Err(Error::InvalidArgument(format!("confidences ({r}, {s}) must be nonnegative with a positive sum")));
    }
    Ok((r / (r + s), s))
}

/// Inverse of [`confidences_to_alpha`] with `s = 1`.
pub fn alpha_to_confidences(alpha: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("α = {alpha} has no finite pair of confidences")));
    }
    Ok((alpha / (1.0 - alpha), 1.0))
}

/// Weighted power mean `(Σ w_i v_i^p)^{1/p}`; `p = 0` is the geometric mean.
pub fn power_mean(values: &[f64], weights: &[f64], p: f64) -> Result<f64> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::ShapeMismatch("power mean needs one weight per value".into()));
    }
    if values.iter().any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::InvalidArgument("power mean needs positive values".into()));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotASimplex(format!("{weights:?}")));
    }
    if p == 0.0 {
        return Ok(values.iter().zip(weights).map(|(v, w)| w * v.ln()).sum::<f64>().exp());
    }
    Ok(values.iter().zip(weights).map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p))
}
