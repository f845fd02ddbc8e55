//! Random instances and brute-force oracles that share no code with the
//! library beyond the public model types.

#![allow(dead_code)]

use pdgloss::{Cpd, Edge, Pdg, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random point of the simplex with every entry at least `floor / n`.
pub fn simplex(rng: &mut impl Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|x| (1.0 - floor) * x / z + floor / n as f64).collect()
}

pub fn rows(rng: &mut impl Rng, r: usize, c: usize) -> Vec<Vec<f64>> {
    (0..r).map(|_| simplex(rng, c, 0.05)).collect()
}

pub fn var(name: &str, size: usize) -> Variable {
    Variable::indexed(name, size)
}

pub fn unconditional(v: &Variable, p: &[f64]) -> Cpd {
    Cpd::unconditional(v.clone(), p.to_vec()).unwrap()
}

pub fn conditional(s: &Variable, t: &Variable, r: &[Vec<f64>]) -> Cpd {
    Cpd::conditional(s.clone(), t.clone(), r.to_vec()).unwrap()
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

pub fn normalize(w: &[f64]) -> Vec<f64> {
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Empirical distribution over `n` cells of the given cell indices.
pub fn empirical(cells: &[usize], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &c in cells {
        out[c] += 1.0 / cells.len() as f64;
    }
    out
}

/// `H(Y | X)` for a joint table over `(X, Y)` stored row-major with `k` columns.
pub fn conditional_entropy(joint: &[f64], k: usize) -> f64 {
    joint
        .chunks(k)
        .map(|row| {
            let m: f64 = row.iter().sum();
            row.iter().filter(|&&p| p > 0.0).map(|p| -p * (p / m).ln()).sum::<f64>()
        })
        .sum()
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = index % dims[i];
        index /= dims[i];
    }
    out
}

fn number(assignment: &[usize], dims: &[usize]) -> usize {
    assignment.iter().zip(dims).fold(0, |acc, (a, d)| acc * d + a)
}

/// A belief about `targets` given `sources`, by position in the model.
#[derive(Clone, Debug)]
pub struct Belief {
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub table: Vec<f64>,
    pub beta: f64,
    pub alpha: f64,
}

/// A finite model kept independently of the library's representation.
#[derive(Clone, Debug)]
pub struct Model {
    pub dims: Vec<usize>,
    pub beliefs: Vec<Belief>,
}

impl Model {
    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn random_belief(&self, rng: &mut impl Rng, beta: (f64, f64), alpha: (f64, f64)) -> Belief {
        let n = self.dims.len();
        let t = rng.random_range(0..n);
        let sources = if n > 1 && rng.random_bool(0.5) {
            let mut s = rng.random_range(0..n - 1);
            if s >= t {
                s += 1;
            }
            vec![s]
        } else {
            vec![]
        };
        let r: usize = sources.iter().map(|&s| self.dims[s]).product();
        let table = rows(rng, r, self.dims[t]).concat();
        Belief {
            sources,
            targets: vec![t],
            table,
            beta: rng.random_range(beta.0..=beta.1),
            alpha: rng.random_range(alpha.0..=alpha.1),
        }
    }

    pub fn random(rng: &mut impl Rng, vars: usize, max_domain: usize, edges: usize, beta: (f64, f64)) -> Model {
        let dims = (0..vars).map(|_| rng.random_range(2..=max_domain)).collect();
        let mut m = Model { dims, beliefs: Vec::new() };
        for _ in 0..edges {
            let b = m.random_belief(rng, beta, (0.0, 1.0));
            m.beliefs.push(b);
        }
        m
    }

    pub fn variables(&self) -> Vec<Variable> {
        self.dims.iter().enumerate().map(|(i, &d)| var(&format!("V{i}"), d)).collect()
    }

    pub fn to_pdg(&self) -> Pdg {
        let vars = self.variables();
        let edges = self
            .beliefs
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let pick = |ix: &[usize]| ix.iter().map(|&j| vars[j].clone()).collect::<Vec<_>>();
                let cpd = Cpd::new(pick(&b.sources), pick(&b.targets), b.table.clone()).unwrap();
                Edge::new(format!("e{i}"), cpd).with_beta(b.beta).with_alpha(b.alpha)
            })
            .collect();
        Pdg::new(vars, edges).unwrap()
    }

    /// `Inc(μ) + γ·IDef(μ)` by direct summation over cells.
    pub fn score(&self, mu: &[f64], gamma: f64) -> f64 {
        let mut total = if gamma > 0.0 { -gamma * entropy(mu) } else { 0.0 };
        for b in &self.beliefs {
            let sd: Vec<usize> = b.sources.iter().map(|&i| self.dims[i]).collect();
            let td: Vec<usize> = b.targets.iter().map(|&i| self.dims[i]).collect();
            let (r, c) = (sd.iter().product::<usize>(), td.iter().product::<usize>());
            let mut joint = vec![0.0; r * c];
            for (cell, &m) in mu.iter().enumerate() {
                let a = digits(cell, &self.dims);
                let s: Vec<usize> = b.sources.iter().map(|&i| a[i]).collect();
                let t: Vec<usize> = b.targets.iter().map(|&i| a[i]).collect();
                joint[number(&s, &sd) * c + number(&t, &td)] += m;
            }
            for (row, chunk) in joint.chunks(c).enumerate() {
                let ms: f64 = chunk.iter().sum();
                for (col, &m) in chunk.iter().enumerate() {
                    if m > 0.0 {
                        let p = b.table[row * c + col];
                        total += b.beta * m * (m / (ms * p)).ln();
                        total -= gamma * b.alpha * m * (m / ms).ln();
                    }
                }
            }
        }
        total
    }

    /// Minimum of `score(·, 0)` over the joint simplex: the best point of a
    /// coarse lattice, refined by pairwise mass exchanges with a shrinking step.
    pub fn grid_minimum(&self, resolution: usize) -> (f64, Vec<f64>) {
        let n = self.cells();
        let mut best = (f64::INFINITY, vec![1.0 / n as f64; n]);
        let mut counts = vec![0usize; n];
        lattice(&mut counts, 0, resolution, &mut |c| {
            let mu: Vec<f64> = c.iter().map(|&k| k as f64 / resolution as f64).collect();
            let v = self.score(&mu, 0.0);
            if v < best.0 {
                best = (v, mu);
            }
        });
        let (mut value, mut mu) = best;
        let mut step = 0.5 / resolution as f64;
        while step > 1e-13 {
            let mut improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j || mu[j] <= 0.0 {
                        continue;
                    }
                    let m = step.min(mu[j]);
                    mu[i] += m;
                    mu[j] -= m;
                    let v = self.score(&mu, 0.0);
                    if v < value - 1e-15 {
                        value = v;
                        improved = true;
                    } else {
                        mu[i] -= m;
                        mu[j] += m;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        (value, mu)
    }
}

fn lattice(counts: &mut [usize], at: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if at + 1 == counts.len() {
        counts[at] = left;
        visit(counts);
        return;
    }
    for k in 0..=left {
        counts[at] = k;
        lattice(counts, at + 1, left - k, visit);
    }
}

/// `−(r+s) log Σ (p^r q^s)^{1/(r+s)}`, summed in the plain domain.
pub fn two_belief_value(p: &[f64], q: &[f64], r: f64, s: f64) -> f64 {
    let t = r + s;
    let z: f64 = p.iter().zip(q).map(|(a, b)| a.powf(r / t) * b.powf(s / t)).sum();
    -t * z.ln()
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum()
}

/// `log Z` and the Gibbs distribution of factors `(scope, values, θ)` over `dims`.
pub fn gibbs(dims: &[usize], factors: &[(Vec<usize>, Vec<f64>, f64)]) -> (f64, Vec<f64>) {
    let n: usize = dims.iter().product();
    let w: Vec<f64> = (0..n)
        .map(|cell| {
            let a = digits(cell, dims);
            factors
                .iter()
                .map(|(scope, values, theta)| {
                    let sd: Vec<usize> = scope.iter().map(|&i| dims[i]).collect();
                    let s: Vec<usize> = scope.iter().map(|&i| a[i]).collect();
                    values[number(&s, &sd)].powf(*theta)
                })
                .product()
        })
        .collect();
    let z: f64 = w.iter().sum();
    (z.ln(), w.iter().map(|x| x / z).collect())
}

/// Two Gaussian beliefs about one real quantity, integrated analytically:
/// `−(β1+β2) log ∫ (N1^β1 N2^β2)^{1/(β1+β2)}`.
pub fn gaussian_pair(m1: f64, s1: f64, b1: f64, m2: f64, s2: f64, b2: f64) -> f64 {
    let t = b1 + b2;
    let (a, b) = (b1 / t, b2 / t);
    let precision = a / (s1 * s1) + b / (s2 * s2);
    let quad = a * b / (s1 * s1 * s2 * s2) / precision * (m1 - m2).powi(2);
    let log_integral = -a * s1.ln() - b * s2.ln() - 0.5 * precision.ln() - 0.5 * quad;
    -t * log_integral
}
