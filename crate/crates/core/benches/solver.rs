use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pdgloss::model::{Cpd, Edge, Pdg, Variable};
use pdgloss::solver::{min_gamma_score, SolveOptions};

fn chain(n: usize, k: usize) -> Pdg {
    let vars: Vec<Variable> = (0..n).map(|i| Variable::indexed(format!("V{i}"), k)).collect();
    let mut edges = Vec::new();
    let prior: Vec<f64> = (0..k).map(|j| (j + 1) as f64).collect();
    let z: f64 = prior.iter().sum();
    edges.push(Edge::new("prior", Cpd::unconditional(vars[0].clone(), prior.iter().map(|p| p / z).collect()).unwrap()));
    for i in 1..n {
        let rows = (0..k)
            .map(|a| {
                let w: Vec<f64> = (0..k).map(|b| if a == b { 3.0 } else { 1.0 + (i + b) as f64 % 2.0 }).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let cpd = Cpd::conditional(vars[i - 1].clone(), vars[i].clone(), rows).unwrap();
        edges.push(Edge::new(format!("f{i}"), cpd));
        let back: Vec<f64> = (0..k).map(|j| ((j * 7 + i) % k + 1) as f64).collect();
        let s: f64 = back.iter().sum();
        edges.push(Edge::new(format!("m{i}"), Cpd::unconditional(vars[i].clone(), back.iter().map(|b| b / s).collect()).unwrap()));
    }
    Pdg::new(vars, edges).unwrap()
}

fn restarts(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_gamma_score");
    group.sample_size(10);
    for &(n, k) in &[(3, 3), (4, 4)] {
        let pdg = chain(n, k);
        for parallel in [false, true] {
            let opts = SolveOptions { parallel, restarts: Some(8), ..SolveOptions::default() };
            let id = BenchmarkId::new(if parallel { "parallel" } else { "sequential" }, format!("{n}x{k}"));
            group.bench_with_input(id, &pdg, |b, pdg| b.iter(|| min_gamma_score(pdg, 0.5, &opts).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, restarts);
criterion_main!(benches);
