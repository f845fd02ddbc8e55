use serde::Serialize;

use super::power_mean;
use crate::error::{Error, Result};
use crate::model::{Cpd, Edge, Pdg, Variable};
use crate::score::Score;
use crate::solver::{min_gamma_score, SolveOptions};

/// A Gaussian belief `N(mean, sigma²)` held with confidence `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSpec {
    pub mean: f64,
    pub sigma: f64,
    pub beta: f64,
}

impl GaussianSpec {
    pub fn new(mean: f64, sigma: f64, beta: f64) -> Result<GaussianSpec> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if !mean.is_finite() {
            return Err(Error::InvalidArgument(format!("mean must be finite, got {mean}")));
        }
        Ok(GaussianSpec { mean, sigma, beta })
    }

    pub fn unit(mean: f64) -> GaussianSpec {
        GaussianSpec { mean, sigma: 1.0, beta: 1.0 }
    }

    fn density(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.sigma;
        (-0.5 * z * z).exp() / self.sigma
    }
}

fn check_specs(a: &[GaussianSpec], b: &[GaussianSpec], weights: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.len() != weights.len() {
        return Err(Error::ShapeMismatch("one Gaussian pair and one weight per x".into()));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotASimplex(format!("{weights:?}")));
    }
    Ok(())
}

/// Inconsistency of two conditional Gaussian beliefs about `Y` given `X`,
/// with `X` held to `weights` (a distribution over the x's):
///
/// `E_x[(β1+β2)·log(QM/GM) + ½·β1β2/(β1+β2)·((μ1−μ2)/QM)²]`
///
/// where QM and GM are the quadratic and geometric means of `(σ1, σ2)`
/// weighted by `(β2, β1)/(β1+β2)`.
pub fn two_gaussian_inconsistency(a: &[GaussianSpec], b: &[GaussianSpec], weights: &[f64]) -> Result<Score> {
    check_specs(a, b, weights)?;
    let mut total = 0.0;
    for ((g1, g2), &w) in a.iter().zip(b).zip(weights) {
        if w == 0.0 {
            continue;
        }
        let bsum = g1.beta + g2.beta;
        let hat = [g2.beta / bsum, g1.beta / bsum];
        let sigmas = [g1.sigma, g2.sigma];
        let qm = power_mean(&sigmas, &hat, 2.0)?;
        let gm = power_mean(&sigmas, &hat, 0.0)?;
        let z = (g1.mean - g2.mean) / qm;
        total += w * (bsum * (qm / gm).ln() + 0.5 * g1.beta * g2.beta / bsum * z * z);
    }
    Ok(Score::nats(total.max(0.0)))
}

/// Numerical counterpart of [`two_gaussian_inconsistency`]: `Y` is
/// discretized on a grid of spacing `step` covering `±width` standard
/// deviations around both means, and the two-edge PDG is solved directly.
pub fn discretized_two_gaussian(
    a: &[GaussianSpec],
    b: &[GaussianSpec],
    weights: &[f64],
    step: f64,
    width: f64,
) -> Result<Score> {
    check_specs(a, b, weights)?;
    if !(step > 0.0 && width > 0.0) {
        return Err(Error::InvalidArgument("step and width must be positive".into()));
    }
    let mut total = 0.0;
    for ((g1, g2), &w) in a.iter().zip(b).zip(weights) {
        if w == 0.0 {
            continue;
        }
        let lo = (g1.mean - width * g1.sigma).min(g2.mean - width * g2.sigma);
        let hi = (g1.mean + width * g1.sigma).max(g2.mean + width * g2.sigma);
        let n = ((hi - lo) / step).ceil() as usize + 1;
        let y = Variable::indexed("Y", n);
        let grid = |g: &GaussianSpec| {
            let d: Vec<f64> = (0..n).map(|i| g.density(lo + i as f64 * step)).collect();
            let z: f64 = d.iter().sum();
            d.into_iter().map(|x| x / z).collect::<Vec<_>>()
        };
        let pdg = Pdg::new(
            vec![y.clone()],
            vec![
                Edge::new("p1", Cpd::unconditional(y.clone(), grid(g1))?).with_beta(g1.beta),
                Edge::new("p2", Cpd::unconditional(y, grid(g2))?).with_beta(g2.beta),
            ],
        )?;
        let opts = SolveOptions { restarts: Some(1), ..SolveOptions::default() };
        total += w * min_gamma_score(&pdg, 0.0, &opts)?.inconsistency.value();
    }
    Ok(Score::nats(total))
}

/// The completed square of a sum of two weighted parabolas:
/// `(β1/σ1²)(y−f)² + (β2/σ2²)(y−h)² = ((y−g)/σ̃)² + residual·(f−h)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletedSquare {
    pub g: f64,
    pub sigma_tilde: f64,
    pub residual: f64,
}

impl CompletedSquare {
    pub fn eval(&self, y: f64, f: f64, h: f64) -> f64 {
        ((y - self.g) / self.sigma_tilde).powi(2) + self.residual * (f - h).powi(2)
    }
}

pub fn complete_square(beta1: f64, sigma1: f64, f: f64, beta2: f64, sigma2: f64, h: f64) -> Result<CompletedSquare> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidArgument("sigmas must be positive".into()));
    }
    let (v1, v2) = (sigma1 * sigma1, sigma2 * sigma2);
    let denom = beta1 * v2 + beta2 * v1;
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::InvalidArgument("confidences must not both be zero".into()));
    }
    Ok(CompletedSquare {
        g: (beta1 * v2 * f + beta2 * v1 * h) / denom,
        sigma_tilde: sigma1 * sigma2 / denom.sqrt(),
        residual: beta1 * beta2 / denom,
    })
}

/// The constant `c` in `⟨M⟩ = c · E_D |f(X) − h(X)|²` for two unit-variance
/// Gaussian beliefs with unit confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MseConstant {
    Half,
    Quarter,
}

impl MseConstant {
    /// The constant confirmed by the closed form and the discretized solver.
    pub const AUTHORITATIVE: MseConstant = MseConstant::Quarter;

    pub fn factor(self) -> f64 {
        match self {
            MseConstant::Half => 0.5,
            MseConstant::Quarter => 0.25,
        }
    }

    /// `c · Σ_x D(x)·(f(x) − h(x))²`.
    pub fn mse(self, f: &[f64], h: &[f64], weights: &[f64]) -> f64 {
        self.factor() * f.iter().zip(h).zip(weights).map(|((a, b), w)| w * (a - b).powi(2)).sum::<f64>()
    }
}
